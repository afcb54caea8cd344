#pragma once

#include "urates/core.hpp"
#include "urates/concept_class.hpp"
#include "urates/dimensions.hpp"
#include "urates/bounds.hpp"
#include "urates/rng.hpp"
#include "urates/distribution.hpp"
#include "urates/strategies.hpp"
#include "urates/partial.hpp"
#include "urates/predictor.hpp"
#include "urates/adversary.hpp"
#include "urates/learners.hpp"
#include "urates/lab.hpp"
