#pragma once

#include "rfan/acquisition.hpp"
#include "rfan/causal.hpp"
#include "rfan/config.hpp"
#include "rfan/dataset.hpp"
#include "rfan/errors.hpp"
#include "rfan/gp.hpp"
#include "rfan/harness.hpp"
#include "rfan/kernels.hpp"
#include "rfan/metrics.hpp"
#include "rfan/patients.hpp"
#include "rfan/report.hpp"
#include "rfan/rng.hpp"
#include "rfan/stats.hpp"
#include "rfan/trial.hpp"
