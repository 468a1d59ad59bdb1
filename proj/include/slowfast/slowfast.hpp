#pragma once

#include "slowfast/analysis.hpp"
#include "slowfast/basin.hpp"
#include "slowfast/control.hpp"
#include "slowfast/errors.hpp"
#include "slowfast/estimator.hpp"
#include "slowfast/forcing.hpp"
#include "slowfast/integrator.hpp"
#include "slowfast/io.hpp"
#include "slowfast/model.hpp"
#include "slowfast/parallel.hpp"
#include "slowfast/probe.hpp"
#include "slowfast/scenario.hpp"
#include "slowfast/sweep.hpp"
