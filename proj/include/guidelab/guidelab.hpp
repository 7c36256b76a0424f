#pragma once

#include "guidelab/commands.hpp"
#include "guidelab/config.hpp"
#include "guidelab/core.hpp"
#include "guidelab/data.hpp"
#include "guidelab/experiments.hpp"
#include "guidelab/forward.hpp"
#include "guidelab/guidance.hpp"
#include "guidelab/metrics.hpp"
#include "guidelab/mlp.hpp"
#include "guidelab/models.hpp"
#include "guidelab/random.hpp"
#include "guidelab/report.hpp"
#include "guidelab/sampler.hpp"
#include "guidelab/schedule.hpp"
