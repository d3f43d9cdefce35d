#pragma once

#include "causalad/config.hpp"
#include "causalad/detection.hpp"
#include "causalad/discovery/discover.hpp"
#include "causalad/error.hpp"
#include "causalad/evaluation.hpp"
#include "causalad/experiment.hpp"
#include "causalad/graph.hpp"
#include "causalad/log.hpp"
#include "causalad/models/local_model.hpp"
#include "causalad/pipeline.hpp"
#include "causalad/random.hpp"
#include "causalad/rca.hpp"
#include "causalad/simulation.hpp"
#include "causalad/stats.hpp"
#include "causalad/timeseries.hpp"
