#ifndef ARTLENS_HPP
#define ARTLENS_HPP

#include "artlens/error.hpp"
#include "artlens/eval.hpp"
#include "artlens/knn.hpp"
#include "artlens/matrix.hpp"
#include "artlens/predictions.hpp"
#include "artlens/probe.hpp"
#include "artlens/retrieval.hpp"
#include "artlens/rng.hpp"
#include "artlens/simcore.hpp"
#include "artlens/store.hpp"
#include "artlens/zeroshot.hpp"

namespace artlens {
inline constexpr const char* kVersion = "0.1.0";
}

#endif // ARTLENS_HPP
