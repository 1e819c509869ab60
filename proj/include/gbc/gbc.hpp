#pragma once

#include "gbc/errors.hpp"   // IWYU pragma: export
#include "gbc/grid.hpp"     // IWYU pragma: export
#include "gbc/image.hpp"    // IWYU pragma: export
#include "gbc/gabor.hpp"    // IWYU pragma: export
#include "gbc/radon.hpp"    // IWYU pragma: export
#include "gbc/barcode.hpp"  // IWYU pragma: export
#include "gbc/index.hpp"    // IWYU pragma: export
#include "gbc/irma.hpp"     // IWYU pragma: export
#include "gbc/manifest.hpp" // IWYU pragma: export
#include "gbc/parallel.hpp" // IWYU pragma: export
