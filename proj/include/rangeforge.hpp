#pragma once

#include "rangeforge/core/diagnostics.hpp"
#include "rangeforge/core/net.hpp"
#include "rangeforge/core/result.hpp"
#include "rangeforge/core/rng.hpp"
#include "rangeforge/control_plane.hpp"
#include "rangeforge/detection.hpp"
#include "rangeforge/dsl.hpp"
#include "rangeforge/flow.hpp"
#include "rangeforge/inject.hpp"
#include "rangeforge/instance.hpp"
#include "rangeforge/json_io.hpp"
#include "rangeforge/lifecycle.hpp"
#include "rangeforge/netsim.hpp"
#include "rangeforge/placement.hpp"
#include "rangeforge/scenario.hpp"
#include "rangeforge/store.hpp"
#include "rangeforge/templates.hpp"
#include "rangeforge/topology.hpp"
