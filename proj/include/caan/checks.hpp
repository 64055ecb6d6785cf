#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "caan/tensor.hpp"
#include "caan/types.hpp"

namespace caan::checks {

// --- independent oracles ---------------------------------------------------
// Deliberately naive implementations, kept apart from the production paths
// they are used to verify.

std::vector<double> naive_matmul(const std::vector<double>& a, int m, int k,
                                 const std::vector<double>& b, int n);

std::vector<double> naive_conv1d(const std::vector<double>& x, int frames, int c_in,
                                 const std::vector<double>& kernel, int width, int c_out, int stride,
                                 int padding);

std::vector<double> naive_max_pool1d(const std::vector<double>& x, int frames, int cols, int window,
                                     int stride);

double dot(const std::vector<double>& a, const std::vector<double>& b);

struct KnapsackSolution {
    double value = 0.0;
    int frames = 0;
    std::vector<int> selected;
};

// Brute-force subset enumeration; items <= ~20.
KnapsackSolution exhaustive_knapsack(const std::vector<double>& values,
                                     const std::vector<int>& lengths, int budget);

struct SegmentationSolution {
    double cost = 0.0;
    std::vector<int> boundaries;
};

// Enumerates every segmentation of F frames into at most max_segments
// parts and returns the best penalized choice.
SegmentationSolution exhaustive_segmentation(const FeatureSequence& x, int max_segments,
                                             double penalty);

// Within-segment scatter summed over a given boundary list, computed
// directly from feature vectors.
double segmentation_cost(const FeatureSequence& x, const std::vector<int>& boundaries);

// --- gradient checking -------------------------------------------------------

struct GradCheckResult {
    double max_rel_err = 0.0;
    std::string worst;  // tensor/coordinate of the worst deviation
    bool pass = true;
};

// Central finite differences against the tape gradient of loss_fn. The
// loss must be a pure function of the checked tensors' current values.
// Runs with storage rounding suspended (64-bit evaluation); the default
// step sits below the kink spacing that pooling/rectification induce in
// composed graphs. Checks up to max_coords_per_tensor sampled
// coordinates per tensor.
GradCheckResult grad_check(const std::function<Tensor()>& loss_fn, std::vector<Tensor> tensors,
                           const std::vector<std::string>& names, Rng& rng,
                           double h = 1e-6, double tol = 1e-3, int max_coords_per_tensor = 6);

// --- verify suites ------------------------------------------------------------

struct SuiteResult {
    std::string name;
    bool pass = true;
    std::vector<std::string> failures;
};

std::vector<std::string> suite_names();
SuiteResult run_suite(const std::string& name);
std::vector<SuiteResult> run_all_suites();

}  // namespace caan::checks
