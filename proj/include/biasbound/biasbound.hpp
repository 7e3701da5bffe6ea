#pragma once

#include "biasbound/core.hpp"
#include "biasbound/io.hpp"
#include "biasbound/orbits.hpp"
#include "biasbound/scan.hpp"
#include "biasbound/signal_model.hpp"
#include "biasbound/track_geometry.hpp"
