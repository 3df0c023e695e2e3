#pragma once

#include "shersim/controllers.hpp"
#include "shersim/errors.hpp"
#include "shersim/eye_scene.hpp"
#include "shersim/io_formats.hpp"
#include "shersim/joint_pipeline.hpp"
#include "shersim/kinematics.hpp"
#include "shersim/metrics.hpp"
#include "shersim/scenario.hpp"
#include "shersim/scripted_operator.hpp"
#include "shersim/sim_engine.hpp"
