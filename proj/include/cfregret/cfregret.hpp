#pragma once

#include "cfregret/anytime.hpp"
#include "cfregret/baselines.hpp"
#include "cfregret/bounds.hpp"
#include "cfregret/cf_item.hpp"
#include "cfregret/cf_user.hpp"
#include "cfregret/engine.hpp"
#include "cfregret/harness.hpp"
#include "cfregret/history.hpp"
#include "cfregret/model.hpp"
#include "cfregret/recommender.hpp"
#include "cfregret/regcheck.hpp"
#include "cfregret/rng.hpp"
#include "cfregret/types.hpp"
#include "cfregret/verify.hpp"
