#pragma once

// Umbrella header for the twinmap pipeline library.

#include "twinmap/config.hpp"
#include "twinmap/converter.hpp"
#include "twinmap/error.hpp"
#include "twinmap/geometry.hpp"
#include "twinmap/graph_io.hpp"
#include "twinmap/meshgen.hpp"
#include "twinmap/odr.hpp"
#include "twinmap/osm.hpp"
#include "twinmap/parallel.hpp"
#include "twinmap/registration.hpp"
#include "twinmap/terrain.hpp"
#include "twinmap/xml.hpp"
