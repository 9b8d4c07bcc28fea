#include "steerlab/engine/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "steerlab/numerics/errors.hpp"
#include "steerlab/numerics/parallel.hpp"

namespace steerlab::ops {

namespace {

std::size_t spatialSize(const Tensor& x) { return x.rank() == 4 ? x.dim(2) * x.dim(3) : 1; }

// Output columns ox with 0 <= ox*stride + offset < width, as [lo, hi).
void validRange(long offset, std::size_t stride, std::size_t width, std::size_t outWidth, std::size_t& lo,
                std::size_t& hi) {
    const long s = long(stride);
    long first = offset >= 0 ? 0 : (-offset + s - 1) / s;
    long last = (long(width) - 1 - offset);
    last = last < 0 ? -1 : last / s;
    lo = std::size_t(std::max<long>(first, 0));
    hi = std::size_t(std::min<long>(last + 1, long(outWidth)));
    if (hi < lo) hi = lo;
}

struct ConvShape {
    std::size_t n, c, h, w, o, cpg, opg, kh, kw, oh, ow;
};

ConvShape convShape(const Tensor& x, const Tensor& w, const ConvGeometry& g) {
    if (x.rank() != 4 || w.rank() != 4) throw DimensionError("conv2d: expected rank-4 input and weight");
    ConvShape s{x.dim(0), x.dim(1), x.dim(2), x.dim(3), w.dim(0), w.dim(1), 0, w.dim(2), w.dim(3), 0, 0};
    if (g.groups == 0 || s.c != s.cpg * g.groups || s.o % g.groups)
        throw DimensionError("conv2d: input has " + std::to_string(s.c) + " channels, weight expects " +
                             std::to_string(s.cpg * g.groups));
    if (s.h + 2 * g.padding < s.kh || s.w + 2 * g.padding < s.kw)
        throw DimensionError("conv2d: kernel larger than padded input");
    s.opg = s.o / g.groups;
    s.oh = convOutSize(s.h, s.kh, g);
    s.ow = convOutSize(s.w, s.kw, g);
    return s;
}

}  // namespace

std::size_t convOutSize(std::size_t in, std::size_t kernel, const ConvGeometry& g) {
    return (in + 2 * g.padding - kernel) / g.stride + 1;
}

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor* bias, const ConvGeometry& g) {
    const ConvShape s = convShape(x, w, g);
    Tensor y({s.n, s.o, s.oh, s.ow});
    const float* xd = x.data().data();
    const float* wd = w.data().data();
    float* yd = y.data().data();
    const std::size_t inPlane = s.h * s.w, outPlane = s.oh * s.ow;
    parallelFor(s.n * s.o, [&](std::size_t plane) {
        const std::size_t n = plane / s.o, oc = plane % s.o;
        float* out = yd + plane * outPlane;
        if (bias) std::fill(out, out + outPlane, (*bias)[oc]);
        const std::size_t grp = oc / s.opg;
        for (std::size_t icl = 0; icl < s.cpg; ++icl) {
            const float* in = xd + (n * s.c + grp * s.cpg + icl) * inPlane;
            const float* k = wd + (oc * s.cpg + icl) * s.kh * s.kw;
            for (std::size_t ky = 0; ky < s.kh; ++ky) {
                std::size_t oy0, oy1;
                validRange(long(ky) - long(g.padding), g.stride, s.h, s.oh, oy0, oy1);
                for (std::size_t kx = 0; kx < s.kw; ++kx) {
                    const float wv = k[ky * s.kw + kx];
                    const long xoff = long(kx) - long(g.padding);
                    std::size_t ox0, ox1;
                    validRange(xoff, g.stride, s.w, s.ow, ox0, ox1);
                    for (std::size_t oy = oy0; oy < oy1; ++oy) {
                        const float* row = in + (oy * g.stride + ky - g.padding) * s.w;
                        float* orow = out + oy * s.ow;
                        if (g.stride == 1) {
                            const float* src = row + xoff;
                            for (std::size_t ox = ox0; ox < ox1; ++ox) orow[ox] += wv * src[ox];
                        } else {
                            for (std::size_t ox = ox0; ox < ox1; ++ox)
                                orow[ox] += wv * row[long(ox * g.stride) + xoff];
                        }
                    }
                }
            }
        }
    });
    return y;
}

void conv2dBackward(const Tensor& x, const Tensor& w, const Tensor& gy, const ConvGeometry& g, Tensor* gx, Tensor* gw,
                    Tensor* gb) {
    const ConvShape s = convShape(x, w, g);
    if (gy.shape() != Shape{s.n, s.o, s.oh, s.ow}) throw DimensionError("conv2dBackward: gradient shape mismatch");
    const std::size_t inPlane = s.h * s.w, outPlane = s.oh * s.ow;
    if (gx) *gx = Tensor(x.shape());
    if (gw) *gw = Tensor(w.shape());
    if (gb) {
        *gb = Tensor({s.o});
        for (std::size_t oc = 0; oc < s.o; ++oc) {
            double sum = 0;
            for (std::size_t n = 0; n < s.n; ++n) {
                const float* go = gy.data().data() + (n * s.o + oc) * outPlane;
                for (std::size_t i = 0; i < outPlane; ++i) sum += go[i];
            }
            (*gb)[oc] = static_cast<float>(sum);
        }
    }
    if (!gx && !gw) return;
    const float* xd = x.data().data();
    const float* wd = w.data().data();
    const float* gyd = gy.data().data();
    float* gxd = gx ? gx->data().data() : nullptr;
    std::vector<double> wacc(gw ? w.size() : 0, 0.0);
    for (std::size_t n = 0; n < s.n; ++n) {
        for (std::size_t oc = 0; oc < s.o; ++oc) {
            const float* go = gyd + (n * s.o + oc) * outPlane;
            const std::size_t grp = oc / s.opg;
            for (std::size_t icl = 0; icl < s.cpg; ++icl) {
                const std::size_t inIndex = (n * s.c + grp * s.cpg + icl) * inPlane;
                const float* in = xd + inIndex;
                float* gin = gxd ? gxd + inIndex : nullptr;
                const std::size_t kbase = (oc * s.cpg + icl) * s.kh * s.kw;
                for (std::size_t ky = 0; ky < s.kh; ++ky) {
                    std::size_t oy0, oy1;
                    validRange(long(ky) - long(g.padding), g.stride, s.h, s.oh, oy0, oy1);
                    for (std::size_t kx = 0; kx < s.kw; ++kx) {
                        const float wv = wd[kbase + ky * s.kw + kx];
                        const long xoff = long(kx) - long(g.padding);
                        std::size_t ox0, ox1;
                        validRange(xoff, g.stride, s.w, s.ow, ox0, ox1);
                        float dot = 0.0f;
                        for (std::size_t oy = oy0; oy < oy1; ++oy) {
                            const std::size_t rowBase = (oy * g.stride + ky - g.padding) * s.w;
                            const float* grow = go + oy * s.ow;
                            if (g.stride == 1) {
                                const float* src = in + rowBase + xoff;
                                if (gin) {
                                    float* dst = gin + rowBase + xoff;
                                    for (std::size_t ox = ox0; ox < ox1; ++ox) dst[ox] += wv * grow[ox];
                                }
                                if (gw)
                                    for (std::size_t ox = ox0; ox < ox1; ++ox) dot += grow[ox] * src[ox];
                            } else {
                                for (std::size_t ox = ox0; ox < ox1; ++ox) {
                                    const std::size_t idx = rowBase + std::size_t(long(ox * g.stride) + xoff);
                                    if (gin) gin[idx] += wv * grow[ox];
                                    if (gw) dot += grow[ox] * in[idx];
                                }
                            }
                        }
                        if (gw) wacc[kbase + ky * s.kw + kx] += dot;
                    }
                }
            }
        }
    }
    if (gw)
        for (std::size_t i = 0; i < wacc.size(); ++i) (*gw)[i] = static_cast<float>(wacc[i]);
}

Tensor batchNorm(const Tensor& x, const Tensor& gamma, const Tensor& beta, Tensor& runningMean, Tensor& runningVar,
                 bool training, bool updateRunning, BatchNormCache& cache) {
    if (x.rank() != 2 && x.rank() != 4) throw DimensionError("batchNorm: expected (N,C) or (N,C,H,W)");
    const std::size_t n = x.dim(0), c = x.dim(1), hw = spatialSize(x);
    if (gamma.size() != c) throw DimensionError("batchNorm: channel mismatch");
    const std::size_t count = n * hw;
    cache.training = training;
    cache.invStd.assign(c, 0.0);
    cache.normalized = Tensor(x.shape());
    Tensor y(x.shape());
    const float* xd = x.data().data();
    for (std::size_t ch = 0; ch < c; ++ch) {
        double mean, var;
        if (training) {
            double sum = 0;
            for (std::size_t b = 0; b < n; ++b) {
                const float* p = xd + (b * c + ch) * hw;
                for (std::size_t i = 0; i < hw; ++i) sum += p[i];
            }
            mean = sum / double(count);
            double ss = 0;
            for (std::size_t b = 0; b < n; ++b) {
                const float* p = xd + (b * c + ch) * hw;
                for (std::size_t i = 0; i < hw; ++i) ss += (p[i] - mean) * (p[i] - mean);
            }
            var = ss / double(count);
            if (updateRunning) {
                const double unbiased = count > 1 ? ss / double(count - 1) : var;
                runningMean[ch] = static_cast<float>((1 - kBatchNormMomentum) * runningMean[ch] + kBatchNormMomentum * mean);
                runningVar[ch] =
                    static_cast<float>((1 - kBatchNormMomentum) * runningVar[ch] + kBatchNormMomentum * unbiased);
            }
        } else {
            mean = runningMean[ch];
            var = runningVar[ch];
        }
        const double inv = 1.0 / std::sqrt(var + kBatchNormEps);
        cache.invStd[ch] = inv;
        const float g = gamma[ch], bt = beta[ch];
        const float m = static_cast<float>(mean), fi = static_cast<float>(inv);
        for (std::size_t b = 0; b < n; ++b) {
            const std::size_t off = (b * c + ch) * hw;
            for (std::size_t i = 0; i < hw; ++i) {
                const float xh = (xd[off + i] - m) * fi;
                cache.normalized[off + i] = xh;
                y[off + i] = g * xh + bt;
            }
        }
    }
    return y;
}

void batchNormBackward(const Tensor& gy, const Tensor& gamma, const BatchNormCache& cache, Tensor* gx, Tensor* ggamma,
                       Tensor* gbeta) {
    const Tensor& xh = cache.normalized;
    const std::size_t n = xh.dim(0), c = xh.dim(1), hw = spatialSize(xh), count = n * hw;
    if (gx) *gx = Tensor(xh.shape());
    if (ggamma) *ggamma = Tensor({c});
    if (gbeta) *gbeta = Tensor({c});
    for (std::size_t ch = 0; ch < c; ++ch) {
        double sg = 0, sgx = 0;
        for (std::size_t b = 0; b < n; ++b) {
            const std::size_t off = (b * c + ch) * hw;
            for (std::size_t i = 0; i < hw; ++i) {
                sg += gy[off + i];
                sgx += double(gy[off + i]) * xh[off + i];
            }
        }
        if (ggamma) (*ggamma)[ch] = static_cast<float>(sgx);
        if (gbeta) (*gbeta)[ch] = static_cast<float>(sg);
        if (!gx) continue;
        const double scale = double(gamma[ch]) * cache.invStd[ch];
        for (std::size_t b = 0; b < n; ++b) {
            const std::size_t off = (b * c + ch) * hw;
            for (std::size_t i = 0; i < hw; ++i) {
                double v;
                if (cache.training)
                    v = scale * (double(gy[off + i]) - sg / double(count) - double(xh[off + i]) * sgx / double(count));
                else
                    v = scale * gy[off + i];
                (*gx)[off + i] = static_cast<float>(v);
            }
        }
    }
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor* bias) {
    if (x.rank() != 2 || w.rank() != 2 || x.dim(1) != w.dim(1)) throw DimensionError("linear: shape mismatch");
    const std::size_t n = x.dim(0), in = x.dim(1), out = w.dim(0);
    Tensor y({n, out});
    for (std::size_t b = 0; b < n; ++b)
        for (std::size_t o = 0; o < out; ++o) {
            double s = bias ? (*bias)[o] : 0.0;
            for (std::size_t i = 0; i < in; ++i) s += double(x[b * in + i]) * w[o * in + i];
            y[b * out + o] = static_cast<float>(s);
        }
    return y;
}

void linearBackward(const Tensor& x, const Tensor& w, const Tensor& gy, Tensor* gx, Tensor* gw, Tensor* gb) {
    const std::size_t n = x.dim(0), in = x.dim(1), out = w.dim(0);
    if (gx) {
        *gx = Tensor(x.shape());
        for (std::size_t b = 0; b < n; ++b)
            for (std::size_t i = 0; i < in; ++i) {
                double s = 0;
                for (std::size_t o = 0; o < out; ++o) s += double(gy[b * out + o]) * w[o * in + i];
                (*gx)[b * in + i] = static_cast<float>(s);
            }
    }
    if (gw) {
        *gw = Tensor(w.shape());
        for (std::size_t o = 0; o < out; ++o)
            for (std::size_t i = 0; i < in; ++i) {
                double s = 0;
                for (std::size_t b = 0; b < n; ++b) s += double(gy[b * out + o]) * x[b * in + i];
                (*gw)[o * in + i] = static_cast<float>(s);
            }
    }
    if (gb) {
        *gb = Tensor({out});
        for (std::size_t o = 0; o < out; ++o) {
            double s = 0;
            for (std::size_t b = 0; b < n; ++b) s += gy[b * out + o];
            (*gb)[o] = static_cast<float>(s);
        }
    }
}

Tensor activation(const Tensor& x, ActivationKind kind) {
    Tensor y(x.shape());
    const std::size_t n = x.size();
    switch (kind) {
        case ActivationKind::ReLU:
            for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > 0.0f ? x[i] : 0.0f;
            break;
        case ActivationKind::CELU:
            for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > 0.0f ? x[i] : std::expm1(x[i]);
            break;
        case ActivationKind::Sigmoid:
            for (std::size_t i = 0; i < n; ++i) y[i] = static_cast<float>(1.0 / (1.0 + std::exp(-double(x[i]))));
            break;
    }
    return y;
}

Tensor activationBackward(const Tensor& x, const Tensor& y, const Tensor& gy, ActivationKind kind) {
    Tensor gx(x.shape());
    const std::size_t n = x.size();
    switch (kind) {
        case ActivationKind::ReLU:
            for (std::size_t i = 0; i < n; ++i) gx[i] = x[i] > 0.0f ? gy[i] : 0.0f;
            break;
        case ActivationKind::CELU:
            for (std::size_t i = 0; i < n; ++i) gx[i] = x[i] > 0.0f ? gy[i] : gy[i] * (y[i] + 1.0f);
            break;
        case ActivationKind::Sigmoid:
            for (std::size_t i = 0; i < n; ++i) gx[i] = gy[i] * y[i] * (1.0f - y[i]);
            break;
    }
    return gx;
}

namespace {

struct Tap {
    std::size_t i0, i1;
    float w0, w1;
};

std::vector<Tap> upsampleTaps(std::size_t in, std::size_t scale) {
    std::vector<Tap> taps(in * scale);
    for (std::size_t o = 0; o < taps.size(); ++o) {
        double src = (double(o) + 0.5) / double(scale) - 0.5;
        if (src < 0) src = 0;
        std::size_t i0 = std::min(std::size_t(src), in - 1);
        const std::size_t i1 = std::min(i0 + 1, in - 1);
        const double lambda = src - double(i0);
        taps[o] = {i0, i1, static_cast<float>(1.0 - lambda), static_cast<float>(lambda)};
    }
    return taps;
}

}  // namespace

Tensor bilinearUpsample(const Tensor& x, std::size_t scale) {
    if (x.rank() != 4) throw DimensionError("bilinearUpsample: expected rank-4 input");
    const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    const auto ty = upsampleTaps(h, scale), tx = upsampleTaps(w, scale);
    const std::size_t oh = h * scale, ow = w * scale;
    Tensor y({n, c, oh, ow});
    for (std::size_t p = 0; p < n * c; ++p) {
        const float* in = x.data().data() + p * h * w;
        float* out = y.data().data() + p * oh * ow;
        for (std::size_t oy = 0; oy < oh; ++oy) {
            const Tap& a = ty[oy];
            for (std::size_t ox = 0; ox < ow; ++ox) {
                const Tap& b = tx[ox];
                out[oy * ow + ox] = a.w0 * (b.w0 * in[a.i0 * w + b.i0] + b.w1 * in[a.i0 * w + b.i1]) +
                                    a.w1 * (b.w0 * in[a.i1 * w + b.i0] + b.w1 * in[a.i1 * w + b.i1]);
            }
        }
    }
    return y;
}

Tensor bilinearUpsampleBackward(const Tensor& gy, const Shape& inputShape, std::size_t scale) {
    const std::size_t n = inputShape[0], c = inputShape[1], h = inputShape[2], w = inputShape[3];
    const auto ty = upsampleTaps(h, scale), tx = upsampleTaps(w, scale);
    const std::size_t oh = h * scale, ow = w * scale;
    Tensor gx(inputShape);
    for (std::size_t p = 0; p < n * c; ++p) {
        const float* go = gy.data().data() + p * oh * ow;
        float* gi = gx.data().data() + p * h * w;
        for (std::size_t oy = 0; oy < oh; ++oy) {
            const Tap& a = ty[oy];
            for (std::size_t ox = 0; ox < ow; ++ox) {
                const Tap& b = tx[ox];
                const float g = go[oy * ow + ox];
                gi[a.i0 * w + b.i0] += a.w0 * b.w0 * g;
                gi[a.i0 * w + b.i1] += a.w0 * b.w1 * g;
                gi[a.i1 * w + b.i0] += a.w1 * b.w0 * g;
                gi[a.i1 * w + b.i1] += a.w1 * b.w1 * g;
            }
        }
    }
    return gx;
}

Tensor globalAvgPool(const Tensor& x) {
    if (x.rank() != 4) throw DimensionError("globalAvgPool: expected rank-4 input");
    const std::size_t n = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
    Tensor y({n, c});
    for (std::size_t p = 0; p < n * c; ++p) {
        double s = 0;
        for (std::size_t i = 0; i < hw; ++i) s += x[p * hw + i];
        y[p] = static_cast<float>(s / double(hw));
    }
    return y;
}

Tensor globalAvgPoolBackward(const Tensor& gy, const Shape& inputShape) {
    Tensor gx(inputShape);
    const std::size_t hw = inputShape[2] * inputShape[3];
    for (std::size_t p = 0; p < gy.size(); ++p) {
        const float v = gy[p] / float(hw);
        std::fill_n(gx.data().data() + p * hw, hw, v);
    }
    return gx;
}

Tensor concat(const std::vector<const Tensor*>& xs) {
    const Tensor& first = *xs.at(0);
    const std::size_t n = first.dim(0), hw = spatialSize(first);
    std::size_t c = 0;
    for (const Tensor* t : xs) {
        if (t->dim(0) != n || spatialSize(*t) != hw) throw DimensionError("concat: inputs differ in batch or spatial size");
        c += t->dim(1);
    }
    Shape shape = first.shape();
    shape[1] = c;
    Tensor y(shape);
    for (std::size_t b = 0; b < n; ++b) {
        std::size_t offset = 0;
        for (const Tensor* t : xs) {
            const std::size_t block = t->dim(1) * hw;
            std::copy_n(t->data().data() + b * block, block, y.data().data() + (b * c * hw) + offset);
            offset += block;
        }
    }
    return y;
}

Tensor channelSlice(const Tensor& g, std::size_t begin, std::size_t count) {
    const std::size_t n = g.dim(0), c = g.dim(1), hw = spatialSize(g);
    Shape shape = g.shape();
    shape[1] = count;
    Tensor out(shape);
    for (std::size_t b = 0; b < n; ++b)
        std::copy_n(g.data().data() + (b * c + begin) * hw, count * hw, out.data().data() + b * count * hw);
    return out;
}

}  // namespace steerlab::ops
