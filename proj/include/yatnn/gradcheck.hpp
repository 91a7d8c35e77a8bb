#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "yatnn/model.hpp"
#include "yatnn/rng.hpp"

namespace yatnn {

struct GradCheckReport {
    double max_rel_err = 0.0;
    std::size_t failures = 0;
    std::size_t coords_checked = 0;
    std::size_t configs = 0;
    std::string worst_coord;
};

struct GradCheckSpec {
    double h = 1e-5;
    double tol = 1e-4;
    // When the coordinate count exceeds this, a seeded random subset of this
    // size is probed instead of the full sweep.
    std::size_t max_coords = SIZE_MAX;
};

// Central-difference comparison of analytic gradients. `loss` evaluates the
// scalar objective at the current parameter values; `compute_grads` fills the
// tensors' gradient buffers. Relative error uses
// |a - fd| / max(1e-8, |a|, |fd|).
GradCheckReport check_gradients(const std::function<double()>& loss,
                                const std::function<void()>& compute_grads,
                                std::vector<ParamTensor> tensors,
                                const GradCheckSpec& spec = {},
                                RngState* coord_rng = nullptr);

void merge(GradCheckReport& into, const GradCheckReport& part);

// Random-configuration families; every family keeps dims small (<= 16 per
// axis) so full coordinate sweeps stay cheap.
GradCheckReport grad_check_yat_dense(int trials, RngState& rng);
GradCheckReport grad_check_dense(int trials, RngState& rng);
GradCheckReport grad_check_softermax_head(int trials, RngState& rng);
GradCheckReport grad_check_e_mha(int trials, RngState& rng);
GradCheckReport grad_check_patch_embed(int trials, RngState& rng);
GradCheckReport grad_check_pool(int trials, RngState& rng);
GradCheckReport grad_check_regularizer(int trials, RngState& rng);
GradCheckReport grad_check_emlp(int trials, RngState& rng);

// Full E-ViT encoder block at an arbitrary width; coordinates are subsampled
// to `max_coords` when the parameter space is large.
GradCheckReport grad_check_evit_block(std::size_t width, std::size_t heads,
                                      std::size_t mlp_width, std::size_t max_coords,
                                      RngState& rng);

struct GradSuiteReport {
    std::map<std::string, GradCheckReport> families;
    double max_rel_err = 0.0;
    std::size_t failures = 0;
    std::size_t configs = 0;
};

GradSuiteReport run_grad_suite(int trials_per_family, RngState& rng);

}  // namespace yatnn
