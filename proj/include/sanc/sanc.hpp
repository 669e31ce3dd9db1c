#pragma once

#include "sanc/controller.hpp"
#include "sanc/harness/config.hpp"
#include "sanc/harness/experiment.hpp"
#include "sanc/harness/output.hpp"
#include "sanc/harness/presets.hpp"
#include "sanc/harness/verify.hpp"
#include "sanc/jet.hpp"
#include "sanc/monitor.hpp"
#include "sanc/plant.hpp"
#include "sanc/rbf.hpp"
#include "sanc/rng.hpp"
#include "sanc/sde.hpp"
