#pragma once

#include "arbor/error.hpp"
#include "arbor/forest.hpp"
#include "arbor/geometry.hpp"
#include "arbor/ipp.hpp"
#include "arbor/json_io.hpp"
#include "arbor/lsystem.hpp"
#include "arbor/mesh_library.hpp"
#include "arbor/rng.hpp"
#include "arbor/stl.hpp"
#include "arbor/templates.hpp"
#include "arbor/transform.hpp"
#include "arbor/tree.hpp"
