#pragma once

#include "gbb/geometry.hpp"
#include "gbb/hull.hpp"
#include "gbb/convex.hpp"
#include "gbb/bounding.hpp"
#include "gbb/pointset.hpp"
#include "gbb/metric.hpp"
#include "gbb/gripper.hpp"
#include "gbb/conic_program.hpp"
#include "gbb/socp_solver.hpp"
#include "gbb/micp.hpp"
#include "gbb/micp_ik.hpp"
#include "gbb/local_ik.hpp"
#include "gbb/planner.hpp"
#include "gbb/solution_io.hpp"
#include "gbb/verify.hpp"
#include "gbb/scene.hpp"
