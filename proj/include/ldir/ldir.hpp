#pragma once

// Umbrella header.

#include "ldir/anchors.hpp"
#include "ldir/encoder.hpp"
#include "ldir/errors.hpp"
#include "ldir/eval.hpp"
#include "ldir/kmeans.hpp"
#include "ldir/providers.hpp"
#include "ldir/relative.hpp"
#include "ldir/rng.hpp"
#include "ldir/store.hpp"
#include "ldir/vector.hpp"
