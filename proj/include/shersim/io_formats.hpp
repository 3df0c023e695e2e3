#pragma once

#include "shersim/io/scenario_io.hpp"
#include "shersim/io/text.hpp"
#include "shersim/io/trace_io.hpp"
#include "shersim/io/trial_io.hpp"
