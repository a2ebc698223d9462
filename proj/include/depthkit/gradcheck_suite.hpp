#pragma once

#include <functional>
#include <string>
#include <vector>

#include "depthkit/tensor.hpp"

namespace dk {

struct GradcheckCase {
    std::string name;
    bool expect_fail = false;  // negative control: detection counts as success
    std::function<GradcheckReport()> run;
};

// One case per differentiable op, the loss functions, the end-to-end desk
// model composite loss, and a sabotaged negative control. All cases run in
// 64-bit with central differences (h=1e-5, tol=1e-4).
std::vector<GradcheckCase> gradcheck_registry();

struct GradcheckOutcome {
    std::string name;
    double max_rel_err = 0.0;
    long coords = 0;
    bool ok = false;  // pass, or expected failure detected
    bool expected_fail = false;
};

// runs the whole registry; `ok` on every row means the suite passes
std::vector<GradcheckOutcome> run_gradcheck_suite();

}  // namespace dk
