#pragma once

#include "hh/audit.hpp"
#include "hh/collector.hpp"
#include "hh/common.hpp"
#include "hh/context.hpp"
#include "hh/heap_hierarchy.hpp"
#include "hh/instrumentation.hpp"
#include "hh/memops.hpp"
#include "hh/object_store.hpp"
#include "hh/runtime.hpp"
