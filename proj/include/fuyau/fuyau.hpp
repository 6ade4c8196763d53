#pragma once

#include "fuyau/grid.hpp"
#include "fuyau/hermitian.hpp"
#include "fuyau/forms.hpp"
#include "fuyau/geometry.hpp"
#include "fuyau/modes.hpp"
#include "fuyau/flow.hpp"
#include "fuyau/diagnostics.hpp"
#include "fuyau/run.hpp"
#include "fuyau/sweep.hpp"
#include "fuyau/io.hpp"
#include "fuyau/selftest.hpp"
