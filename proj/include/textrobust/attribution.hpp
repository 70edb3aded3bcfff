#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "textrobust/corpus.hpp"
#include "textrobust/proxy_model.hpp"

namespace textrobust {

enum class AttributionKind {
    gradient,
    grad_x_input,
    integrated_gradients,
    smooth_grad,
    kernel_shap,
    occlusion,
    attention_rollout,
    attention_grad_rollout,
};

const char* attribution_kind_name(AttributionKind k);
std::optional<AttributionKind> parse_attribution_kind(const std::string& name);

enum class BaselineKind { zero_embedding, mask_piece };

// Which scalar the coalition value function reads for KernelShap and
// Occlusion. Gradient-family methods always attribute the logit.
enum class ValueTarget { probability, logit };

struct AttributionParams {
    int ig_steps = 50;
    int sg_samples = 50;
    // default: 0.1 x the standard deviation of the embedding table entries
    std::optional<double> sg_sigma;
    // default: 2n + 2048, capped at full enumeration when 2^n is smaller
    std::optional<std::size_t> shap_samples;
    BaselineKind baseline = BaselineKind::zero_embedding;
    std::string mask_piece;
    ValueTarget value_target = ValueTarget::probability;
};

struct AttributionMethod {
    AttributionKind kind = AttributionKind::kernel_shap;
    AttributionParams params;
};

struct TokenAttribution {
    AttributionKind kind = AttributionKind::kernel_shap;
    int target_class = 0;
    std::vector<double> scores;  // one per subtoken
    // IG: |sum - (logit(x) - logit(baseline))|; KernelShap: efficiency gap
    std::optional<double> completeness_gap;
};

// Per-subtoken attribution scores for one prediction. Deterministic given
// (model, tokens, method, target_class, seed); the seed only feeds
// SmoothGrad noise and KernelShap coalition sampling.
TokenAttribution attribute(const ProxyModel& model, const TokenizedText& tokens,
                           const AttributionMethod& method, int target_class,
                           std::uint64_t seed = 0);

// Exposed for tests: baseline embedding row per the method parameters.
std::vector<double> baseline_row(const ProxyModel& model, const AttributionParams& params);

}  // namespace textrobust
