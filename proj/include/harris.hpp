#pragma once

#include "harris/balance.hpp"
#include "harris/core.hpp"
#include "harris/coverage.hpp"
#include "harris/discrete_kernel.hpp"
#include "harris/discretize.hpp"
#include "harris/drift.hpp"
#include "harris/error.hpp"
#include "harris/escape.hpp"
#include "harris/experiment.hpp"
#include "harris/integrability.hpp"
#include "harris/metropolis.hpp"
#include "harris/mwg.hpp"
#include "harris/pathologies.hpp"
#include "harris/quadrature.hpp"
#include "harris/replicas.hpp"
#include "harris/rng.hpp"
#include "harris/trace.hpp"
#include "harris/transdim.hpp"
#include "harris/version.hpp"
