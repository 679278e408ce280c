#pragma once

#include "uoi/error.hpp"
#include "uoi/support.hpp"
#include "uoi/parallel.hpp"
#include "uoi/timing.hpp"
#include "uoi/problem.hpp"
#include "uoi/admm.hpp"
#include "uoi/resampling.hpp"
#include "uoi/pipeline.hpp"
#include "uoi/baseline.hpp"
#include "uoi/var.hpp"
#include "uoi/synthetic.hpp"
#include "uoi/matrix_io.hpp"
#include "uoi/fit_io.hpp"
#include "uoi/bench.hpp"
