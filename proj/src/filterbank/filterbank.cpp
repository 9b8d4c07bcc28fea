#include "steerlab/filterbank/filterbank.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>

#include "steerlab/numerics/errors.hpp"
#include "steerlab/numerics/numerics.hpp"

namespace steerlab {

namespace {

constexpr int kMaxRedraws = 64;
constexpr double kDegenerateNorm = 1e-8;

struct MethodName {
    InitMethod method;
    const char* name;
};

constexpr MethodName kMethodNames[] = {
    {InitMethod::Ones, "ones"},       {InitMethod::DCT2, "dct2"},
    {InitMethod::UnchangedRandom, "unchanged-random"}, {InitMethod::UnchangedGuide, "unchanged-guide"},
    {InitMethod::GHaar, "ghaar"},     {InitMethod::Psine, "psine"},
    {InitMethod::GuidedSteer, "guidedsteer"},
};

std::size_t squareSide(const FilterSpec& spec, const char* who) {
    if (spec.h != spec.w) {
        throw DimensionError(std::string(who) + ": only square kernels are supported");
    }
    if (spec.h < 2) throw DomainError(std::string(who) + ": kernel side must be >= 2");
    return spec.h;
}

// Scales to unit Frobenius norm; false when the kernel is numerically zero.
bool normalizeInPlace(std::vector<double>& k) {
    double ss = 0.0;
    for (double v : k) ss += v * v;
    const double norm = std::sqrt(ss);
    if (norm < kDegenerateNorm) return false;
    for (double& v : k) v /= norm;
    return true;
}

void storeKernel(Tensor& out, std::size_t index, const std::vector<double>& k) {
    float* dst = out.data().data() + index * k.size();
    for (std::size_t i = 0; i < k.size(); ++i) dst[i] = static_cast<float>(k[i]);
}

Tensor asRows(const Tensor& guide, const char* who) {
    if (guide.rank() == 2) return guide;
    if (guide.rank() == 3) return guide.reshaped({guide.dim(0), guide.dim(1) * guide.dim(2)});
    throw DimensionError(std::string(who) + ": guide must be (rows, m) or (rows, h, w)");
}

}  // namespace

std::string toString(InitMethod method) {
    for (const auto& entry : kMethodNames)
        if (entry.method == method) return entry.name;
    return "unknown";
}

InitMethod parseInitMethod(const std::string& name) {
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    for (const auto& entry : kMethodNames)
        if (lower == entry.name) return entry.method;
    throw ConfigError("unknown init method '" + name + "'");
}

bool requiresGuide(InitMethod method) {
    return method == InitMethod::UnchangedGuide || method == InitMethod::GuidedSteer;
}

void FilterSpec::validate() const {
    if (requiresGuide(method) && !guide) throw ConfigError(toString(method) + " requires a guide");
    if (!requiresGuide(method) && guide) throw ConfigError(toString(method) + " does not take a guide");
}

Tensor onesFilters(const FilterSpec& spec) { return Tensor({spec.count, spec.h, spec.w}, 1.0f); }

Tensor dct2Filters(const FilterSpec& spec, const Basis& basis, RngStream& rng) {
    if (basis.h != spec.h || basis.w != spec.w) {
        throw DimensionError("dct2Filters: basis is " + std::to_string(basis.h) + "x" + std::to_string(basis.w) +
                             " but kernels are " + std::to_string(spec.h) + "x" + std::to_string(spec.w));
    }
    const std::size_t m = basis.size();
    Tensor out({spec.count, spec.h, spec.w});
    for (std::size_t i = 0; i < spec.count; ++i) {
        const std::size_t row = rng.below(m);
        std::copy_n(basis.matrix.data().data() + row * m, m, out.data().data() + i * m);
    }
    return out;
}

Tensor ghaarVector(double frequency, std::size_t m) {
    const Tensor x = linspace(0.0, std::numbers::pi, m);
    Tensor g({m});
    for (std::size_t i = 0; i < m; ++i) g[i] = static_cast<float>(std::cos(frequency * double(x[i])));
    return g;
}

Tensor ghaarKernel(std::size_t m, const double (&frequencies)[3], const double (&weights)[3]) {
    const Tensor g1 = ghaarVector(frequencies[0], m);
    const Tensor g2 = ghaarVector(frequencies[1], m);
    const Tensor g3 = ghaarVector(frequencies[2], m);
    Tensor k({m, m});
    for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < m; ++c)
            k.at(r, c) = static_cast<float>(weights[0] * g1[c] + weights[1] * g2[r] +
                                            weights[2] * double(g3[r]) * double(g3[c]));
    return k;
}

Tensor ghaarFilters(const FilterSpec& spec, RngStream& rng) {
    const std::size_t m = squareSide(spec, "ghaarFilters");
    const double fmax = 2.0 * double(m - 1);
    Tensor out({spec.count, m, m});
    std::vector<double> k(m * m);
    for (std::size_t n = 0; n < spec.count; ++n) {
        bool ok = false;
        for (int attempt = 0; attempt < kMaxRedraws && !ok; ++attempt) {
            double f[3], a[3];
            for (double& v : f) v = rng.uniform(0.0, fmax);
            for (double& v : a) v = rng.normal();
            const Tensor raw = ghaarKernel(m, f, a);
            for (std::size_t i = 0; i < k.size(); ++i) k[i] = raw[i];
            ok = normalizeInPlace(k);
        }
        if (!ok) throw NumericError("ghaarFilters: repeatedly drew zero kernels");
        storeKernel(out, n, k);
    }
    return out;
}

Tensor psineKernel(std::size_t m, const std::vector<PsineTerm>& terms) {
    if (m < 2) throw DomainError("psineKernel: kernel side must be >= 2");
    std::vector<double> k(m * m, 0.0);
    for (const PsineTerm& t : terms) {
        const Tensor gr = ghaarVector(t.rowFrequency, m);
        const Tensor gc = ghaarVector(t.colFrequency, m);
        for (std::size_t r = 0; r < m; ++r)
            for (std::size_t c = 0; c < m; ++c)
                k[r * m + c] += t.weight * std::pow(double(gr[r]) * double(gc[c]), t.power);
    }
    double mean = 0.0;
    for (double v : k) mean += v;
    mean /= double(k.size());
    for (double& v : k) v -= mean;
    if (!normalizeInPlace(k)) throw NumericError("psineKernel: kernel is constant");
    Tensor out({m, m});
    storeKernel(out, 0, k);
    return out;
}

std::vector<PsineTerm> samplePsineTerms(RngStream& rng) {
    const int maxPower = 1 + int(rng.below(3));
    const std::size_t terms = std::size_t(2 * maxPower + 1);
    std::vector<PsineTerm> out(terms);
    for (PsineTerm& t : out) t.power = 1 + int(rng.below(std::uint64_t(maxPower)));
    if (maxPower >= 2) {
        const bool anyOdd = std::any_of(out.begin(), out.end(), [](const PsineTerm& t) { return t.power % 2 == 1; });
        if (!anyOdd) out[0].power = 1;
        const bool anyEven = std::any_of(out.begin(), out.end(), [](const PsineTerm& t) { return t.power % 2 == 0; });
        if (!anyEven) out[1].power = 2;
    }
    for (PsineTerm& t : out) {
        t.rowFrequency = rng.uniform(1.0, 5.0);
        t.colFrequency = rng.uniform(1.0, 5.0);
        t.weight = rng.normal();
    }
    return out;
}

Tensor psineFilters(const FilterSpec& spec, RngStream& rng) {
    const std::size_t m = squareSide(spec, "psineFilters");
    Tensor out({spec.count, m, m});
    for (std::size_t n = 0; n < spec.count; ++n) {
        bool ok = false;
        for (int attempt = 0; attempt < kMaxRedraws && !ok; ++attempt) {
            try {
                const Tensor k = psineKernel(m, samplePsineTerms(rng));
                std::copy(k.data().begin(), k.data().end(), out.data().begin() + std::ptrdiff_t(n * m * m));
                ok = true;
            } catch (const NumericError&) {
            }
        }
        if (!ok) throw NumericError("psineFilters: repeatedly drew constant kernels");
    }
    return out;
}

std::vector<Tensor> guidedSteerFilters(const std::vector<std::size_t>& counts, const std::vector<Tensor>& guides,
                                       const RngStream& rng, const GuidedSteerOptions& options) {
    if (counts.size() != guides.size()) throw DimensionError("guidedSteerFilters: one count per guide layer");
    std::vector<Tensor> rows;
    rows.reserve(guides.size());
    std::size_t m = 0, total = 0;
    for (const Tensor& g : guides) {
        rows.push_back(asRows(g, "guidedSteerFilters"));
        const std::size_t mg = rows.back().dim(1);
        if (m != 0 && mg != m) throw DimensionError("guidedSteerFilters: guide layers differ in kernel size");
        m = mg;
        total += rows.back().dim(0);
    }
    if (total < 2) throw DomainError("guidedSteerFilters: need at least 2 guide rows");

    std::vector<double> center(m, 0.0);
    if (options.centered) {
        for (const Tensor& g : rows)
            for (std::size_t r = 0; r < g.dim(0); ++r)
                for (std::size_t j = 0; j < m; ++j) center[j] += g.at(r, j);
        for (double& c : center) c /= double(total);
    }

    std::vector<double> gram(m * m, 0.0);
    for (const Tensor& g : rows)
        for (std::size_t r = 0; r < g.dim(0); ++r)
            for (std::size_t i = 0; i < m; ++i) {
                const double gi = g.at(r, i) - center[i];
                for (std::size_t j = 0; j < m; ++j) gram[i * m + j] += gi * (g.at(r, j) - center[j]);
            }
    Tensor gramT({m, m});
    for (std::size_t i = 0; i < m * m; ++i) gramT[i] = static_cast<float>(gram[i]);
    const Tensor v = symEig(gramT).vectors;  // columns are basis vectors; B = V^T

    std::vector<Tensor> out;
    out.reserve(rows.size());
    for (std::size_t layer = 0; layer < rows.size(); ++layer) {
        const Tensor& g = rows[layer];
        const std::size_t c = g.dim(0), n = counts[layer];
        if (c == 0 && n > 0) throw DomainError("guidedSteerFilters: layer " + std::to_string(layer) + " has no guide rows");
        const RngStream layerRng = rng.derive(layer);

        // W (n x m): resampled coefficients of each basis column.
        std::vector<double> weights(n * m);
        Tensor column({c});
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t r = 0; r < c; ++r) {
                double p = 0.0;
                for (std::size_t j = 0; j < m; ++j) p += (double(g.at(r, j)) - center[j]) * double(v.at(j, i));
                column[r] = static_cast<float>(p);
            }
            RngStream colRng = layerRng.derive(i);
            Tensor drawn;
            if (options.normalFit) {
                double mean = 0.0, ss = 0.0;
                for (float x : column.data()) mean += x;
                mean /= double(c);
                for (float x : column.data()) ss += (x - mean) * (x - mean);
                drawn = gaussianSample(mean, c > 1 ? ss / double(c - 1) : 0.0, n, colRng);
            } else {
                drawn = kdeSample(column, n, colRng);
            }
            for (std::size_t r = 0; r < n; ++r) weights[r * m + i] = drawn[r];
        }

        Tensor f({n, m});
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t j = 0; j < m; ++j) {
                double s = center[j];
                for (std::size_t i = 0; i < m; ++i) s += weights[r * m + i] * double(v.at(j, i));
                f.at(r, j) = static_cast<float>(s);
            }
        out.push_back(std::move(f));
    }
    return out;
}

Tensor unchangedFilters(const FilterSpec& spec, RngStream& rng) {
    if (spec.method == InitMethod::UnchangedGuide) {
        if (!spec.guide) throw ConfigError("unchanged-guide requires a guide");
        return *spec.guide;
    }
    return kaimingUniform(spec.fanIn, spec.count * spec.h * spec.w, rng).reshaped({spec.count, spec.h, spec.w});
}

Tensor generateFilters(const FilterSpec& spec, const GuidedSteerOptions& options) {
    spec.validate();
    RngStream rng(spec.seed);
    switch (spec.method) {
        case InitMethod::Ones:
            return onesFilters(spec);
        case InitMethod::DCT2:
            return dct2Filters(spec, dct2Basis(spec.h, spec.w), rng);
        case InitMethod::UnchangedRandom:
        case InitMethod::UnchangedGuide:
            return unchangedFilters(spec, rng);
        case InitMethod::GHaar:
            return ghaarFilters(spec, rng);
        case InitMethod::Psine:
            return psineFilters(spec, rng);
        case InitMethod::GuidedSteer: {
            const Tensor guide = asRows(*spec.guide, "generateFilters");
            if (guide.dim(1) != spec.h * spec.w) throw DimensionError("generateFilters: guide kernel size mismatch");
            return guidedSteerFilters({spec.count}, {guide}, rng, options)[0].reshaped({spec.count, spec.h, spec.w});
        }
    }
    throw ConfigError("generateFilters: unhandled method");
}

}  // namespace steerlab
