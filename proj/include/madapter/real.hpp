#pragma once

// Scalar type of this build. The default build is float32. Defining
// MADAPTER_DOUBLE compiles the same sources in double precision inside a
// different inline namespace, so both builds can live in one program.
#if defined(MADAPTER_DOUBLE)
#define MADAPTER_NS f64
#else
#define MADAPTER_NS f32
#endif

namespace madapter {
inline namespace MADAPTER_NS {

#if defined(MADAPTER_DOUBLE)
using Real = double;
#else
using Real = float;
#endif

}  // namespace MADAPTER_NS
}  // namespace madapter
