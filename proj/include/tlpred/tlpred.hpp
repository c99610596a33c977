// Umbrella header.

#ifndef TLPRED_TLPRED_HPP
#define TLPRED_TLPRED_HPP

#include "tlpred/error.hpp"
#include "tlpred/random.hpp"
#include "tlpred/stats.hpp"
#include "tlpred/translin.hpp"
#include "tlpred/pareto.hpp"
#include "tlpred/simulate.hpp"
#include "tlpred/marginal.hpp"
#include "tlpred/tpdm.hpp"
#include "tlpred/predictor.hpp"
#include "tlpred/cpfactor.hpp"
#include "tlpred/angular.hpp"
#include "tlpred/csv.hpp"
#include "tlpred/document.hpp"
#include "tlpred/reference.hpp"
#include "tlpred/pipeline.hpp"

#endif  // TLPRED_TLPRED_HPP
