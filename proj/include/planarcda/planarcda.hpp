#pragma once

#include "planarcda/baselines.hpp"
#include "planarcda/bench.hpp"
#include "planarcda/cdtrl.hpp"
#include "planarcda/correlation.hpp"
#include "planarcda/data.hpp"
#include "planarcda/dataset_io.hpp"
#include "planarcda/error.hpp"
#include "planarcda/evaluation.hpp"
#include "planarcda/linalg.hpp"
#include "planarcda/model_io.hpp"
#include "planarcda/models.hpp"
#include "planarcda/run_config.hpp"
