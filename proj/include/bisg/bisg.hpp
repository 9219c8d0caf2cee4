#pragma once

#include "bisg/csv.hpp"
#include "bisg/eval.hpp"
#include "bisg/geo.hpp"
#include "bisg/inference.hpp"
#include "bisg/manifest.hpp"
#include "bisg/names.hpp"
#include "bisg/race.hpp"
#include "bisg/rng.hpp"
#include "bisg/synth.hpp"
#include "bisg/version.hpp"
