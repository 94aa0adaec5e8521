#pragma once

#include "emdk/errors.hpp"
#include "emdk/multiset.hpp"
#include "emdk/ground.hpp"
#include "emdk/transport.hpp"
#include "emdk/transform.hpp"
#include "emdk/gram.hpp"
#include "emdk/svm.hpp"
#include "emdk/io.hpp"
#include "emdk/pipeline.hpp"
#include "emdk/harness.hpp"
