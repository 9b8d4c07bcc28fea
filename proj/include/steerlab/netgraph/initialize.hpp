#pragma once

#include <cstdint>
#include <vector>

#include "steerlab/filterbank/filterbank.hpp"
#include "steerlab/netgraph/graph.hpp"

namespace steerlab {

/// Overwrites the spatial kernels of `net` (in spatialParams() order) with the
/// generator output of the matching spec and marks them fixed. Each spec's
/// count and kernel shape must match its layer. GuidedSteer specs are not
/// accepted here; use initializeSpatial.
NetworkGraph applyInitializer(const NetworkGraph& net, const std::vector<FilterSpec>& specs);

struct InitOptions {
    InitMethod method = InitMethod::GHaar;
    std::uint64_t seed = 0;
    /// Source of guide kernels for UnchangedGuide and GuidedSteer; spatial
    /// layers are matched by position and must have equal shapes.
    const NetworkGraph* guide = nullptr;
    GuidedSteerOptions guided;
};

/// Initializes every spatial layer with one method. Layer l uses seed
/// derive(l); GuidedSteer runs once per kernel size over all layers of that size.
NetworkGraph initializeSpatial(const NetworkGraph& net, const InitOptions& options);

/// Copy of `net` with every spatial kernel's fixed flag set to `fixed`.
NetworkGraph markSpatialFixed(const NetworkGraph& net, bool fixed);

/// Spatial kernels of one layer viewed as (out * in/groups, kh, kw).
Tensor layerKernels(const ParamTensor& p);

}  // namespace steerlab
