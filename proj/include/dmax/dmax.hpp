#pragma once

#include "dmax/dataset.hpp"
#include "dmax/experiments.hpp"
#include "dmax/feasible_set.hpp"
#include "dmax/linalg.hpp"
#include "dmax/loss.hpp"
#include "dmax/model.hpp"
#include "dmax/phase_oracle.hpp"
#include "dmax/risk.hpp"
#include "dmax/rng.hpp"
#include "dmax/serialize.hpp"
#include "dmax/solver.hpp"
#include "dmax/stationarity.hpp"
