#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "files.hpp"
#include "steerlab/cli/cli.hpp"
#include "steerlab/cli/dataset.hpp"
#include "steerlab/engine/engine.hpp"
#include "steerlab/engine/loss.hpp"
#include "steerlab/explain/explain.hpp"
#include "steerlab/filterbank/filterbank.hpp"
#include "steerlab/netgraph/architectures.hpp"
#include "steerlab/netgraph/initialize.hpp"
#include "steerlab/netgraph/serialize.hpp"
#include "steerlab/numerics/errors.hpp"
#include "steerlab/numerics/parallel.hpp"
#include "steerlab/prune/prune.hpp"

namespace fs = std::filesystem;

namespace steerlab::cli {

namespace {

struct Options {
    std::uint64_t seed = 0;

    std::string method = "ghaar";
    std::string shape = "3x3";
    std::size_t count = 16;
    std::string guide;
    std::size_t fanIn = 0;

    std::string kind = "shapes-seg";
    std::size_t n = 256;
    std::size_t size = 32;

    std::string arch;
    std::string net;
    std::size_t archA = 0;
    std::size_t archB = 0;
    std::size_t inChannels = 1;
    std::size_t classes = kBlobClasses;
    bool fixed = true;

    std::string data;
    std::string val;
    double lr = 1e-3;
    double lrMultiplier = 0;
    std::size_t epochs = 10;
    std::size_t batchSize = 16;
    double focalGamma = 1.0;

    bool saliency = false;
    bool gradOnly = false;
    std::size_t batches = 15;
    std::size_t saliencyBatch = 4;
    std::string scores;

    double fraction = 0;
    bool fillZero = false;
    bool fillNonzeroStats = false;

    std::string fractions = "0,0.01,0.03,0.05,0.1,0.2,0.3,0.5,0.7,0.9";
    std::string order = "both";
};

constexpr const char* kPrunedNote = "pruned";

void parseShape(const std::string& s, std::size_t& h, std::size_t& w) {
    const auto x = s.find('x');
    try {
        if (x == std::string::npos) throw std::invalid_argument(s);
        std::size_t used = 0;
        h = std::stoul(s.substr(0, x), &used);
        if (used != x) throw std::invalid_argument(s);
        w = std::stoul(s.substr(x + 1), &used);
        if (used != s.size() - x - 1) throw std::invalid_argument(s);
    } catch (const std::exception&) {
        throw ConfigError("shape must look like HxW, got '" + s + "'");
    }
    if (h == 0 || w == 0) throw ConfigError("shape dimensions must be positive");
}

std::vector<double> parseFractions(const std::string& s) {
    std::vector<double> out;
    std::istringstream in(s);
    std::string item;
    while (std::getline(in, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ConfigError("bad fraction '" + item + "'");
        }
    }
    if (out.empty()) throw ConfigError("no fractions given");
    return out;
}

void require(const std::string& value, const std::string& flag) {
    if (value.empty()) throw ConfigError(flag + " is required");
}

// Pooled spatial kernels of one shape from a guide network, (n, h, w).
Tensor guideKernels(const NetworkGraph& guide, std::size_t h, std::size_t w) {
    std::vector<float> values;
    for (std::size_t pi : guide.spatialParams()) {
        const Tensor k = layerKernels(guide.params[pi]);
        if (k.dim(1) == h && k.dim(2) == w) values.insert(values.end(), k.data().begin(), k.data().end());
    }
    if (values.empty()) throw ConfigError("guide network has no " + std::to_string(h) + "x" + std::to_string(w) + " kernels");
    const std::size_t n = values.size() / (h * w);
    return Tensor({n, h, w}, std::move(values));
}

SaliencyScores magnitudeScores(const NetworkGraph& net) {
    SaliencyScores s;
    for (std::size_t pi : net.spatialParams()) {
        const Tensor& w = net.params[pi].tensor;
        const std::size_t k = w.dim(2) * w.dim(3);
        Tensor t({w.dim(0), w.dim(1)});
        for (std::size_t j = 0; j < t.size(); ++j) {
            double acc = 0;
            for (std::size_t e = 0; e < k; ++e) acc += std::abs(double(w[j * k + e]));
            t[j] = static_cast<float>(acc);
        }
        s.layers.push_back({pi, net.params[pi].owner, t});
    }
    return s;
}

SaliencyConfig saliencyConfig(const Options& o) {
    SaliencyConfig c;
    c.batches = o.batches;
    c.batchSize = o.saliencyBatch;
    c.gradOnly = o.gradOnly;
    c.seed = o.seed;
    return c;
}

// Scores from a file, from saliency on data, or from kernel L1 norms.
SaliencyScores scoresFor(const Options& o, const NetworkGraph& net, std::string& source) {
    if (!o.scores.empty()) {
        source = "file";
        return loadScoresCsv(o.scores, net);
    }
    if (!o.data.empty()) {
        source = "saliency";
        return saliency(net, loadDataset(o.data).data, saliencyConfig(o));
    }
    source = "l1-magnitude";
    return magnitudeScores(net);
}

std::string kv(const std::string& name, const std::string& value) { return name + "," + value; }

void cmdGenFilters(const Options& o, const fs::path& out, std::ostream& log) {
    FilterSpec spec;
    spec.method = parseInitMethod(o.method);
    parseShape(o.shape, spec.h, spec.w);
    spec.count = o.count;
    spec.seed = o.seed;
    spec.fanIn = o.fanIn ? o.fanIn : spec.h * spec.w;
    if (requiresGuide(spec.method)) {
        require(o.guide, "--guide");
        Tensor g = guideKernels(loadGraph(o.guide), spec.h, spec.w);
        if (spec.method == InitMethod::UnchangedGuide) {
            if (g.dim(0) < spec.count) throw ConfigError("guide network has fewer kernels than --count");
            g = g.slice(0, spec.count);
        }
        spec.guide = std::move(g);
    }
    spec.validate();
    const Tensor filters = generateFilters(spec).reshaped({spec.count, spec.h, spec.w});
    const std::string blob = floatBlob(filters);
    writeText(out / "filters.nfw", blob);
    writeText(out / "filters.svg", filterGridSvg(filters));

    double mean = 0, sq = 0;
    float lo = filters.size() ? filters[0] : 0.0f, hi = lo;
    for (float v : filters.data()) {
        mean += v;
        sq += double(v) * v;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double n = std::max<double>(1.0, double(filters.size()));
    mean /= n;
    char sum[17];
    std::snprintf(sum, sizeof sum, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(reinterpret_cast<const std::uint8_t*>(blob.data()), blob.size())));
    writeCsv(out / "metrics.csv", "name,value",
             {kv("method", toString(spec.method)), kv("h", std::to_string(spec.h)), kv("w", std::to_string(spec.w)),
              kv("count", std::to_string(spec.count)), kv("mean", num(mean)),
              kv("std", num(std::sqrt(std::max(0.0, sq / n - mean * mean)))), kv("min", num(lo)), kv("max", num(hi)),
              kv("fnv1a64", sum)});
    log << "wrote " << spec.count << " " << toString(spec.method) << " filters (" << spec.h << "x" << spec.w
        << "), checksum " << sum << "\n";
}

void cmdGenData(const Options& o, const fs::path& out, std::ostream& log) {
    StoredDataset d{parseDatasetKind(o.kind), {}};
    d.data = synthDataset(d.kind, o.n, o.size, o.seed);
    saveDataset(d, out / "data.slds");
    std::vector<std::string> rows{kv("kind", toString(d.kind)), kv("count", std::to_string(o.n)),
                                  kv("size", std::to_string(o.size))};
    const double rowsN = std::max<double>(1.0, double(o.n));
    if (d.kind == DatasetKind::ShapesSeg) {
        double fg = 0;
        for (float v : d.data.targets.data()) fg += v;
        rows.push_back(kv("foreground_fraction", num(o.n ? fg / double(d.data.targets.size()) : 0.0)));
    } else {
        for (std::size_t c = 0; c < kBlobClasses; ++c) {
            double pos = 0, uncertain = 0;
            for (std::size_t i = 0; i < o.n; ++i) {
                pos += d.data.targets.at(i, c);
                uncertain += 1.0f - d.data.mask->at(i, c);
            }
            rows.push_back(kv("positive_rate_" + std::to_string(c), num(pos / rowsN)));
            rows.push_back(kv("uncertain_rate_" + std::to_string(c), num(uncertain / rowsN)));
        }
    }
    writeCsv(out / "metrics.csv", "name,value", rows);
    log << "wrote " << o.n << " " << toString(d.kind) << " samples\n";
}

void writeParamMetrics(const NetworkGraph& net, const fs::path& path) {
    std::vector<std::string> rows;
    for (const auto& [block, c] : paramBreakdown(net))
        rows.push_back(block + "," + std::to_string(c.total) + "," + std::to_string(c.spatial) + "," +
                       std::to_string(c.fixed));
    const ParamCounts all = countParams(net);
    rows.push_back("total," + std::to_string(all.total) + "," + std::to_string(all.spatial) + "," +
                   std::to_string(all.fixed));
    writeCsv(path, "block,params,spatial,fixed", rows);
}

void cmdInit(const Options& o, const fs::path& out, std::ostream& log) {
    NetworkGraph net;
    if (!o.net.empty()) {
        net = loadGraph(o.net);
    } else {
        require(o.arch, "--arch or --net");
        std::size_t a = o.archA, b = o.archB;
        if (o.arch == "resnet") {
            a = a ? a : 2;
            b = b ? b : 8;
        } else if (o.arch == "densenet") {
            a = a ? a : 3;
            b = b ? b : 8;
        } else if (o.arch == "segnet") {
            a = a ? a : 16;
            b = b ? b : 3;
        }
        net = buildArchitecture(o.arch, a, b, o.inChannels, o.classes, o.seed);
    }
    InitOptions init;
    init.method = parseInitMethod(o.method);
    init.seed = o.seed;
    NetworkGraph guide;
    if (requiresGuide(init.method)) {
        require(o.guide, "--guide");
        guide = loadGraph(o.guide);
        init.guide = &guide;
    }
    net = initializeSpatial(net, init);
    if (!o.fixed) net = markSpatialFixed(net, false);
    saveGraph(net, out / "net.nfg");
    writeParamMetrics(net, out / "metrics.csv");
    const ParamCounts c = countParams(net);
    log << "initialized " << toString(init.method) << (o.fixed ? " (fixed)" : " (learned)") << ": " << c.total
        << " params, " << c.spatial << " spatial\n";
}

void cmdTrain(const Options& o, const fs::path& out, std::ostream& log) {
    require(o.net, "--net");
    require(o.data, "--data");
    NetworkGraph net = loadGraph(o.net);
    const StoredDataset data = loadDataset(o.data);
    std::optional<StoredDataset> val;
    if (!o.val.empty()) val = loadDataset(o.val);

    const bool pruned = std::find(net.notes.begin(), net.notes.end(), kPrunedNote) != net.notes.end();
    const double multiplier = o.lrMultiplier > 0 ? o.lrMultiplier : (pruned ? kPrunedLrMultiplier : 1.0);
    TrainConfig cfg;
    cfg.loss = lossFor(data.kind);
    cfg.lr = o.lr * multiplier;
    cfg.epochs = o.epochs;
    cfg.batchSize = o.batchSize;
    cfg.seed = o.seed;
    cfg.focalGamma = o.focalGamma;
    if (val) cfg.validation = &val->data;
    cfg.onEpoch = [&](const EpochMetrics& m) {
        log << "epoch " << m.epoch << " loss " << num(m.loss) << " metric " << num(m.metric) << "\n";
    };
    const TrainResult r = train(std::move(net), data.data, cfg);
    saveGraph(r.net, out / "net.nfg");
    std::vector<std::string> rows, timing;
    for (const auto& m : r.history) {
        rows.push_back(std::to_string(m.epoch) + "," + num(m.loss) + "," + num(m.metric));
        timing.push_back(std::to_string(m.epoch) + "," + num(m.seconds));
    }
    writeCsv(out / "metrics.csv", "epoch,loss,metric", rows);
    writeCsv(out / "timing.csv", "epoch,seconds", timing);
    log << "trained with lr " << num(cfg.lr) << " (x" << num(multiplier) << ")\n";
}

void cmdExplain(const Options& o, const fs::path& out, std::ostream& log) {
    require(o.net, "--net");
    const NetworkGraph net = loadGraph(o.net);
    std::optional<SaliencyScores> scores;
    if (o.saliency) {
        require(o.data, "--data (with --saliency)");
        scores = saliency(net, loadDataset(o.data).data, saliencyConfig(o));
        writeText(out / "saliency.csv", scoresCsv(*scores));
    }
    const ExplainResult r = explainNetwork(net, scores ? &*scores : nullptr);
    writeExplainReport(r, out);
    std::size_t kernels = 0;
    for (const auto& l : r.layers) kernels += l.kernels;
    writeCsv(out / "metrics.csv", "name,value",
             {kv("weighting", scores ? "saliency" : "uniform"), kv("layers", std::to_string(r.layers.size())),
              kv("groups", std::to_string(r.groups.size())), kv("kernels", std::to_string(kernels))});
    log << "explained " << r.layers.size() << " spatial layers (" << kernels << " kernels, "
        << (scores ? "saliency" : "uniform") << " weights)\n";
}

void cmdPrune(const Options& o, const fs::path& out, std::ostream& log) {
    require(o.net, "--net");
    const NetworkGraph net = loadGraph(o.net);
    std::string source;
    const SaliencyScores scores = scoresFor(o, net, source);
    PruneOptions po;
    po.fraction = o.fraction;
    po.fillZero = o.fillZero;
    po.fill.nonzeroStats = o.fillNonzeroStats;
    po.seed = o.seed;
    PruneOutcome r = channelPrune(net, scores, po);
    if (std::find(r.pruned.notes.begin(), r.pruned.notes.end(), kPrunedNote) == r.pruned.notes.end())
        r.pruned.notes.push_back(kPrunedNote);
    saveGraph(r.pruned, out / "net.nfg");
    saveGraph(r.zeroed, out / "zeroed.nfg");
    writeText(out / "prune_report.txt", "scores " + source + "\n" + toText(r.report));
    const PruneReport& rep = r.report;
    writeCsv(out / "metrics.csv", "name,value",
             {kv("scores", source), kv("kernels_zeroed", std::to_string(rep.kernelsZeroed)),
              kv("kernels_total", std::to_string(rep.kernelsTotal)),
              kv("fraction_spatial_zeroed", num(rep.fractionSpatialZeroed)),
              kv("params_before", std::to_string(rep.paramsBefore)), kv("params_after", std::to_string(rep.paramsAfter)),
              kv("fraction_params_pruned", num(rep.fractionParamsPruned)),
              kv("channels_removed", std::to_string(rep.channelsRemoved())),
              kv("warnings", std::to_string(rep.warnings.size()))});
    log << "zeroed " << num(100 * rep.fractionSpatialZeroed) << "% of spatial kernels, pruned "
        << num(100 * rep.fractionParamsPruned) << "% of params (" << source << " scores)\n";
}

void cmdEval(const Options& o, const fs::path& out, std::ostream& log) {
    require(o.net, "--net");
    require(o.data, "--data");
    NetworkGraph net = loadGraph(o.net);
    const StoredDataset d = loadDataset(o.data);
    d.data.validate();
    const LossKind kind = lossFor(d.kind);
    const Tensor logits = predict(net, d.data.inputs);
    double loss = 0;
    if (kind == LossKind::PixelwiseBCE) {
        loss = pixelwiseBCEWithLogits(logits, d.data.targets).value;
    } else {
        FocalConfig fc;
        fc.gamma = o.focalGamma;
        loss = focalMultiLabelBCE(logits, d.data.targets, d.data.mask ? &*d.data.mask : nullptr, countClasses(d.data), fc)
                   .value;
    }
    const double metric = evaluate(net, d.data, kind);
    const std::string metricName = kind == LossKind::PixelwiseBCE ? "dice" : "mean_auc";
    writeCsv(out / "metrics.csv", "name,value",
             {kv("count", std::to_string(d.data.size())), kv("loss", num(loss)), kv(metricName, num(metric))});
    log << metricName << " " << num(metric) << " loss " << num(loss) << "\n";
}

void cmdZeroSweep(const Options& o, const fs::path& out, std::ostream& log) {
    require(o.net, "--net");
    require(o.data, "--data");
    const NetworkGraph net = loadGraph(o.net);
    const StoredDataset d = loadDataset(o.data);
    const std::vector<double> fractions = parseFractions(o.fractions);
    std::vector<ZeroOrder> orders;
    if (o.order == "least" || o.order == "both") orders.push_back(ZeroOrder::LeastSalient);
    if (o.order == "most" || o.order == "both") orders.push_back(ZeroOrder::MostSalient);
    if (orders.empty()) throw ConfigError("--order must be least, most or both");
    std::string source;
    const SaliencyScores scores = scoresFor(o, net, source);
    const LossKind kind = lossFor(d.kind);
    std::vector<std::string> rows;
    for (ZeroOrder order : orders)
        for (double f : fractions) {
            ZeroResult z = zeroKernels(net, scores, f, order);
            const double metric = evaluate(z.net, d.data, kind);
            const std::string name = order == ZeroOrder::LeastSalient ? "least" : "most";
            rows.push_back(name + "," + num(f) + "," + std::to_string(z.mask.zeroed()) + "," + num(metric));
            log << name << "-salient-first " << num(f) << ": " << num(metric) << "\n";
        }
    writeCsv(out / "sweep.csv", "order,fraction,kernels_zeroed,metric", rows);
}

void applyThreadEnv() {
    const char* raw = std::getenv(kThreadsEnv);
    if (!raw || !*raw) {
        setThreadCount(1);
        return;
    }
    std::size_t used = 0;
    unsigned long n = 0;
    try {
        n = std::stoul(raw, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != std::string(raw).size() || n == 0)
        throw ConfigError(std::string(kThreadsEnv) + " must be a positive integer, got '" + raw + "'");
    setThreadCount(n);
}

}  // namespace

int exitCodeFor(const std::exception& e) {
    if (dynamic_cast<const IoError*>(&e)) return kExitIo;
    if (dynamic_cast<const NumericError*>(&e)) return kExitNumeric;
    if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const GraphError*>(&e) ||
        dynamic_cast<const DimensionError*>(&e) || dynamic_cast<const DomainError*>(&e))
        return kExitConfig;
    return kExitOther;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    std::uint64_t seed = 0;
    std::string outDir = "out";
    Options gf, gd, in, tr, ex, pr, ev, zs;
    CLI::App app{"steerlab: fixed spatial filters, filter spectra and channel pruning"};
    app.name("steerlab");
    app.require_subcommand(1, 1);
    app.fallthrough();
    app.set_config("--config", "", "TOML/INI file of option values; command-line flags win");
    app.add_option("--seed", seed, "Random seed")->capture_default_str();
    app.add_option("--out", outDir, "Output directory")->capture_default_str();

    auto* genFilters = app.add_subcommand("gen-filters", "Generate a filter bank (blob + SVG grid)");
    genFilters->add_option("--method", gf.method, "ones, dct2, unchanged-random, unchanged-guide, ghaar, psine, guidedsteer")
        ->capture_default_str();
    genFilters->add_option("--shape", gf.shape, "Kernel shape HxW")->capture_default_str();
    genFilters->add_option("--count", gf.count, "Number of kernels")->capture_default_str();
    genFilters->add_option("--guide", gf.guide, "Guide network (.nfg) for guided methods");
    genFilters->add_option("--fan-in", gf.fanIn, "Kaiming fan-in for unchanged-random (default h*w)");

    auto* genData = app.add_subcommand("gen-data", "Generate a synthetic dataset");
    genData->add_option("--kind", gd.kind, "shapes-seg or blobs-cls5")->capture_default_str();
    genData->add_option("--n", gd.n, "Number of samples")->capture_default_str();
    genData->add_option("--size", gd.size, "Image side length")->capture_default_str();

    auto* init = app.add_subcommand("init", "Build or load a network and initialize its spatial filters");
    init->add_option("--arch", in.arch, "unetd, resnet, densenet or segnet");
    init->add_option("--net", in.net, "Existing network (.nfg) to re-initialize");
    init->add_option("--arch-a", in.archA, "First size argument (stages, blocks or width)");
    init->add_option("--arch-b", in.archB, "Second size argument (width, growth or depth)");
    init->add_option("--in-channels", in.inChannels, "Input channels")->capture_default_str();
    init->add_option("--classes", in.classes, "Classifier outputs")->capture_default_str();
    init->add_option("--method", in.method, "Spatial initializer")->capture_default_str();
    init->add_option("--guide", in.guide, "Guide network (.nfg) for guided methods");
    init->add_option("--fixed", in.fixed, "Keep spatial filters fixed during training")->capture_default_str();

    auto* trainCmd = app.add_subcommand("train", "Train a network on a dataset");
    trainCmd->add_option("--net", tr.net, "Network (.nfg)");
    trainCmd->add_option("--data", tr.data, "Training data (.slds)");
    trainCmd->add_option("--val", tr.val, "Validation data (.slds) for the per-epoch metric");
    trainCmd->add_option("--lr", tr.lr, "Learning rate")->capture_default_str();
    trainCmd->add_option("--lr-multiplier", tr.lrMultiplier, "Learning-rate multiplier (default 2 for pruned nets, else 1)");
    trainCmd->add_option("--epochs", tr.epochs, "Epochs")->capture_default_str();
    trainCmd->add_option("--batch-size", tr.batchSize, "Minibatch size")->capture_default_str();
    trainCmd->add_option("--focal-gamma", tr.focalGamma, "Focal loss gamma")->capture_default_str();

    auto* explain = app.add_subcommand("explain", "Spectra, heatmaps and bar data of the spatial filters");
    explain->add_option("--net", ex.net, "Network (.nfg)");
    explain->add_option("--data", ex.data, "Labeled data (.slds) for saliency weights");
    explain->add_flag("--saliency", ex.saliency, "Weight kernels by saliency instead of uniformly");
    explain->add_flag("--grad-only", ex.gradOnly, "Saliency from |gradient| only");
    explain->add_option("--batches", ex.batches, "Saliency minibatches")->capture_default_str();
    explain->add_option("--saliency-batch", ex.saliencyBatch, "Saliency minibatch size")->capture_default_str();

    auto* pruneCmd = app.add_subcommand("prune", "Zero the least salient kernels and remove zero channels");
    pruneCmd->add_option("--net", pr.net, "Network (.nfg)");
    pruneCmd->add_option("--fraction", pr.fraction, "Fraction of spatial kernels to zero")->capture_default_str();
    pruneCmd->add_option("--data", pr.data, "Labeled data (.slds) for saliency scores");
    pruneCmd->add_option("--scores", pr.scores, "Saliency scores CSV from explain --saliency");
    pruneCmd->add_flag("--fillzero", pr.fillZero, "Re-initialize zeroed kernels and mark spatial filters fixed");
    pruneCmd->add_flag("--fill-nonzero-stats", pr.fillNonzeroStats, "FillZero statistics over nonzero entries only");
    pruneCmd->add_flag("--grad-only", pr.gradOnly, "Saliency from |gradient| only");
    pruneCmd->add_option("--batches", pr.batches, "Saliency minibatches")->capture_default_str();
    pruneCmd->add_option("--saliency-batch", pr.saliencyBatch, "Saliency minibatch size")->capture_default_str();

    auto* evalCmd = app.add_subcommand("eval", "Loss and metric of a network on a dataset");
    evalCmd->add_option("--net", ev.net, "Network (.nfg)");
    evalCmd->add_option("--data", ev.data, "Data (.slds)");
    evalCmd->add_option("--focal-gamma", ev.focalGamma, "Focal loss gamma")->capture_default_str();

    auto* sweep = app.add_subcommand("zero-sweep", "Metric while progressively zeroing kernels by saliency");
    sweep->add_option("--net", zs.net, "Network (.nfg)");
    sweep->add_option("--data", zs.data, "Labeled data (.slds) for scores and evaluation");
    sweep->add_option("--scores", zs.scores, "Saliency scores CSV instead of computing them");
    sweep->add_option("--fractions", zs.fractions, "Comma-separated zeroing fractions")->capture_default_str();
    sweep->add_option("--order", zs.order, "least, most or both")->capture_default_str();
    sweep->add_flag("--grad-only", zs.gradOnly, "Saliency from |gradient| only");
    sweep->add_option("--batches", zs.batches, "Saliency minibatches")->capture_default_str();
    sweep->add_option("--saliency-batch", zs.saliencyBatch, "Saliency minibatch size")->capture_default_str();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::FileError& e) {
        err << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? kExitOk : kExitConfig;
    }

    try {
        applyThreadEnv();
        const fs::path dir = outDir;
        for (Options* o : {&gf, &gd, &in, &tr, &ex, &pr, &ev, &zs}) o->seed = seed;
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
        writeText(dir / "config.toml", app.config_to_str(true, false));
        if (*genFilters) cmdGenFilters(gf, dir, out);
        if (*genData) cmdGenData(gd, dir, out);
        if (*init) cmdInit(in, dir, out);
        if (*trainCmd) cmdTrain(tr, dir, out);
        if (*explain) cmdExplain(ex, dir, out);
        if (*pruneCmd) cmdPrune(pr, dir, out);
        if (*evalCmd) cmdEval(ev, dir, out);
        if (*sweep) cmdZeroSweep(zs, dir, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exitCodeFor(e);
    }
    return kExitOk;
}

}  // namespace steerlab::cli
