#pragma once

#include "multimatch/agent_target.hpp"
#include "multimatch/conditions.hpp"
#include "multimatch/contract_set.hpp"
#include "multimatch/csd.hpp"
#include "multimatch/market.hpp"
#include "multimatch/random_market.hpp"
#include "multimatch/stability.hpp"
