#include "textrobust/attribution.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "textrobust/hashing.hpp"
#include "textrobust/rng.hpp"

namespace textrobust {

const char* attribution_kind_name(AttributionKind k) {
    switch (k) {
        case AttributionKind::gradient: return "gradient";
        case AttributionKind::grad_x_input: return "grad_x_input";
        case AttributionKind::integrated_gradients: return "integrated_gradients";
        case AttributionKind::smooth_grad: return "smooth_grad";
        case AttributionKind::kernel_shap: return "kernel_shap";
        case AttributionKind::occlusion: return "occlusion";
        case AttributionKind::attention_rollout: return "attention_rollout";
        case AttributionKind::attention_grad_rollout: return "attention_grad_rollout";
    }
    return "?";
}

std::optional<AttributionKind> parse_attribution_kind(const std::string& name) {
    for (int k = 0; k <= static_cast<int>(AttributionKind::attention_grad_rollout); ++k) {
        const auto kind = static_cast<AttributionKind>(k);
        if (name == attribution_kind_name(kind)) return kind;
    }
    return std::nullopt;
}

std::vector<double> baseline_row(const ProxyModel& model, const AttributionParams& params) {
    if (params.baseline == BaselineKind::zero_embedding) {
        return std::vector<double>(model.dim(), 0.0);
    }
    if (params.mask_piece.empty()) {
        throw std::invalid_argument("attribution: mask_piece baseline requires a piece");
    }
    const std::uint32_t id = model.vocab.id_for(params.mask_piece);
    const double* row = model.embedding.row(id);
    return std::vector<double>(row, row + model.dim());
}

namespace {

double table_stddev(const Matrix& m) {
    if (m.data.empty()) return 0.0;
    double mean = 0.0;
    for (double v : m.data) mean += v;
    mean /= static_cast<double>(m.data.size());
    double var = 0.0;
    for (double v : m.data) var += (v - mean) * (v - mean);
    return std::sqrt(var / static_cast<double>(m.data.size()));
}

std::vector<double> l2_rows(const Matrix& g) {
    std::vector<double> out(g.rows, 0.0);
    for (std::size_t t = 0; t < g.rows; ++t) {
        out[t] = std::sqrt(dot(g.row(t), g.row(t), g.cols));
    }
    return out;
}

// single-layer rollout with residual mixing: the effective row r is mixed
// as 0.5*r + 0.5*I and renormalized, then composed with the pooling
// attention a. Since sum(a) == 1, the composed mass of token t reduces to
// (0.5*r_t + 0.5*a_t) / (0.5*sum(r) + 0.5).
std::vector<double> rollout_scores(const std::vector<double>& attention,
                                   const std::vector<double>& row) {
    double row_sum = 0.0;
    for (double v : row) row_sum += v;
    const double denom = 0.5 * row_sum + 0.5;
    std::vector<double> out(row.size());
    for (std::size_t t = 0; t < row.size(); ++t) {
        out[t] = (0.5 * row[t] + 0.5 * attention[t]) / denom;
    }
    return out;
}

// ---- KernelShap ----------------------------------------------------------

struct Coalition {
    std::vector<std::uint8_t> members;  // size n, 0/1
    double weight = 1.0;
    double value = 0.0;
};

double binom(std::size_t n, std::size_t k) {
    double r = 1.0;
    for (std::size_t i = 1; i <= k; ++i) {
        r *= static_cast<double>(n - k + i) / static_cast<double>(i);
    }
    return r;
}

// Solve A x = b (dense, symmetric positive definite in the well-posed
// case) by Gaussian elimination with partial pivoting. Returns false when
// a pivot collapses.
bool solve_linear(Matrix a, std::vector<double> b, std::vector<double>& x) {
    const std::size_t n = a.rows;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r) {
            if (std::fabs(a.at(r, col)) > std::fabs(a.at(pivot, col))) pivot = r;
        }
        if (std::fabs(a.at(pivot, col)) < 1e-12) return false;
        if (pivot != col) {
            for (std::size_t c = 0; c < n; ++c) std::swap(a.at(pivot, c), a.at(col, c));
            std::swap(b[pivot], b[col]);
        }
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a.at(r, col) / a.at(col, col);
            if (f == 0.0) continue;
            for (std::size_t c = col; c < n; ++c) a.at(r, c) -= f * a.at(col, c);
            b[r] -= f * b[col];
        }
    }
    x.assign(n, 0.0);
    for (std::size_t ri = n; ri-- > 0;) {
        double s = b[ri];
        for (std::size_t c = ri + 1; c < n; ++c) s -= a.at(ri, c) * x[c];
        x[ri] = s / a.at(ri, ri);
    }
    return true;
}

// Weighted least squares over coalitions with the efficiency constraint
// (attributions sum to v(full) - v(empty)); player n-1 is eliminated via
// the constraint, which also makes the n == 1 case exact by construction.
std::vector<double> solve_kernel_shap(const std::vector<Coalition>& coalitions, std::size_t n,
                                      double v_empty, double v_full) {
    const double total = v_full - v_empty;
    if (n == 1) return {total};

    const std::size_t m = n - 1;
    Matrix a(m, m);
    std::vector<double> rhs(m, 0.0);
    std::vector<double> x(m);
    for (const auto& co : coalitions) {
        const double zn = co.members[n - 1] ? 1.0 : 0.0;
        const double y = co.value - v_empty - zn * total;
        for (std::size_t i = 0; i < m; ++i) x[i] = (co.members[i] ? 1.0 : 0.0) - zn;
        for (std::size_t i = 0; i < m; ++i) {
            if (x[i] == 0.0) continue;
            const double wi = co.weight * x[i];
            rhs[i] += wi * y;
            for (std::size_t j = 0; j < m; ++j) a.at(i, j) += wi * x[j];
        }
    }

    std::vector<double> phi;
    if (!solve_linear(a, rhs, phi)) {
        // near-singular fit (possible with few samples); ridge and retry
        for (std::size_t i = 0; i < m; ++i) a.at(i, i) += 1e-10;
        if (!solve_linear(a, rhs, phi)) {
            throw std::runtime_error("kernel_shap: singular least-squares system");
        }
    }
    double sum = 0.0;
    for (double p : phi) sum += p;
    phi.push_back(total - sum);
    return phi;
}

}  // namespace

TokenAttribution attribute(const ProxyModel& model, const TokenizedText& tokens,
                           const AttributionMethod& method, int target_class,
                           std::uint64_t seed) {
    if (tokens.subtokens.empty()) throw std::invalid_argument("attribute: zero subtokens");
    if (target_class < 0 || target_class >= model.num_classes()) {
        throw std::out_of_range("attribute: invalid class index " + std::to_string(target_class));
    }
    const AttributionParams& p = method.params;
    const std::size_t n = tokens.subtokens.size();
    const std::size_t d = model.dim();
    const Matrix emb = model.gather_embeddings(tokens);

    TokenAttribution result;
    result.kind = method.kind;
    result.target_class = target_class;

    switch (method.kind) {
        case AttributionKind::gradient: {
            result.scores = l2_rows(model.grad_embeddings(emb, target_class));
            break;
        }
        case AttributionKind::grad_x_input: {
            const Matrix g = model.grad_embeddings(emb, target_class);
            result.scores.assign(n, 0.0);
            for (std::size_t t = 0; t < n; ++t) result.scores[t] = dot(g.row(t), emb.row(t), d);
            break;
        }
        case AttributionKind::integrated_gradients: {
            if (p.ig_steps < 1) throw std::invalid_argument("attribution: ig_steps must be >= 1");
            const std::vector<double> base = baseline_row(model, p);
            Matrix point(n, d);
            Matrix mean_grad(n, d);
            for (int s = 0; s < p.ig_steps; ++s) {
                const double alpha = (static_cast<double>(s) + 0.5) / p.ig_steps;
                for (std::size_t t = 0; t < n; ++t) {
                    for (std::size_t j = 0; j < d; ++j) {
                        point.at(t, j) = base[j] + alpha * (emb.at(t, j) - base[j]);
                    }
                }
                const Matrix g = model.grad_embeddings(point, target_class);
                for (std::size_t i = 0; i < g.data.size(); ++i) {
                    mean_grad.data[i] += g.data[i] / p.ig_steps;
                }
            }
            result.scores.assign(n, 0.0);
            double total = 0.0;
            for (std::size_t t = 0; t < n; ++t) {
                double s = 0.0;
                for (std::size_t j = 0; j < d; ++j) {
                    s += (emb.at(t, j) - base[j]) * mean_grad.at(t, j);
                }
                result.scores[t] = s;
                total += s;
            }
            Matrix base_mat(n, d);
            for (std::size_t t = 0; t < n; ++t) {
                for (std::size_t j = 0; j < d; ++j) base_mat.at(t, j) = base[j];
            }
            const double logit_x = model.forward_embeddings(emb).logits[target_class];
            const double logit_b = model.forward_embeddings(base_mat).logits[target_class];
            result.completeness_gap = std::fabs(total - (logit_x - logit_b));
            break;
        }
        case AttributionKind::smooth_grad: {
            if (p.sg_samples < 1) throw std::invalid_argument("attribution: sg_samples must be >= 1");
            const double sigma = p.sg_sigma.value_or(0.1 * table_stddev(model.embedding));
            Rng rng(stable_hash(seed, "smooth_grad"));
            Matrix noisy(n, d);
            result.scores.assign(n, 0.0);
            for (int s = 0; s < p.sg_samples; ++s) {
                for (std::size_t i = 0; i < noisy.data.size(); ++i) {
                    noisy.data[i] = emb.data[i] + rng.normal(0.0, sigma);
                }
                const auto scores = l2_rows(model.grad_embeddings(noisy, target_class));
                for (std::size_t t = 0; t < n; ++t) result.scores[t] += scores[t] / p.sg_samples;
            }
            break;
        }
        case AttributionKind::occlusion:
        case AttributionKind::kernel_shap: {
            const std::vector<double> base = baseline_row(model, p);
            auto value_of = [&](const std::vector<std::uint8_t>& members) {
                const PoolForward f = model.forward_rows(
                    n, [&](std::size_t t) { return members[t] ? emb.row(t) : base.data(); });
                return p.value_target == ValueTarget::probability ? f.probabilities[target_class]
                                                                  : f.logits[target_class];
            };
            std::vector<std::uint8_t> full(n, 1);
            const double v_full = value_of(full);

            if (method.kind == AttributionKind::occlusion) {
                result.scores.assign(n, 0.0);
                std::vector<std::uint8_t> mask(n, 1);
                for (std::size_t t = 0; t < n; ++t) {
                    mask[t] = 0;
                    result.scores[t] = v_full - value_of(mask);
                    mask[t] = 1;
                }
                break;
            }

            const double v_empty = value_of(std::vector<std::uint8_t>(n, 0));
            const std::size_t budget = p.shap_samples.value_or(2 * n + 2048);
            if (budget < n + 2) {
                throw std::invalid_argument("attribution: shap_samples must be >= n + 2");
            }

            std::vector<Coalition> coalitions;
            const bool enumerate = n < 63 && (n >= 1 && (1ULL << n) <= budget);
            if (n > 1 && enumerate) {
                const std::uint64_t limit = 1ULL << n;
                for (std::uint64_t mask = 1; mask + 1 < limit; ++mask) {
                    Coalition co;
                    co.members.assign(n, 0);
                    std::size_t size = 0;
                    for (std::size_t t = 0; t < n; ++t) {
                        if (mask & (1ULL << t)) {
                            co.members[t] = 1;
                            ++size;
                        }
                    }
                    co.weight = static_cast<double>(n - 1) /
                                (binom(n, size) * static_cast<double>(size) *
                                 static_cast<double>(n - size));
                    co.value = value_of(co.members);
                    coalitions.push_back(std::move(co));
                }
            } else if (n > 1) {
                // sample coalition sizes from the Shapley kernel distribution,
                // subsets uniform within a size; weights are then uniform
                Rng rng(stable_hash(seed, "kernel_shap"));
                std::vector<double> cdf(n - 1, 0.0);
                double acc = 0.0;
                for (std::size_t s = 1; s <= n - 1; ++s) {
                    acc += 1.0 / (static_cast<double>(s) * static_cast<double>(n - s));
                    cdf[s - 1] = acc;
                }
                for (std::size_t k = 0; k + 2 < budget; ++k) {
                    const double u = rng.uniform_real() * acc;
                    std::size_t size = 1;
                    while (size < n - 1 && u > cdf[size - 1]) ++size;
                    Coalition co;
                    co.members.assign(n, 0);
                    for (std::size_t idx : rng.sample_indices(n, size)) co.members[idx] = 1;
                    co.value = value_of(co.members);
                    coalitions.push_back(std::move(co));
                }
            }

            result.scores = solve_kernel_shap(coalitions, n, v_empty, v_full);
            double sum = 0.0;
            for (double s : result.scores) sum += s;
            result.completeness_gap = std::fabs(sum - (v_full - v_empty));
            break;
        }
        case AttributionKind::attention_rollout:
        case AttributionKind::attention_grad_rollout: {
            if (model.config.pooling != Pooling::attentive) {
                throw std::invalid_argument(
                    std::string(attribution_kind_name(method.kind)) +
                    " is unsupported on a mean-pooling model");
            }
            const PoolForward f = model.forward_embeddings(emb);
            if (method.kind == AttributionKind::attention_rollout) {
                result.scores = rollout_scores(f.attention, f.attention);
            } else {
                const auto g = model.grad_wrt_attention(emb, target_class);
                std::vector<double> row(n, 0.0);
                for (std::size_t t = 0; t < n; ++t) {
                    row[t] = std::max(0.0, f.attention[t] * g[t]);
                }
                result.scores = rollout_scores(f.attention, row);
            }
            break;
        }
    }

    for (double s : result.scores) {
        if (!std::isfinite(s)) throw std::runtime_error("attribute: non-finite score");
    }
    return result;
}

}  // namespace textrobust
