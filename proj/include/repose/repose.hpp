#pragma once

// Canonical-space avatar reconstruction toolkit: skinning and deformation
// fields, implicit occupancy fields with isosurface extraction, an
// opacity-aware differentiable sphere renderer, render-and-compare
// refinement, and surface metrics.

#include "repose/bvh.hpp"
#include "repose/contact.hpp"
#include "repose/field.hpp"
#include "repose/geometry.hpp"
#include "repose/grid_io.hpp"
#include "repose/image.hpp"
#include "repose/io_json.hpp"
#include "repose/marching_cubes.hpp"
#include "repose/math.hpp"
#include "repose/mesh.hpp"
#include "repose/mesh_io.hpp"
#include "repose/metrics.hpp"
#include "repose/pipeline.hpp"
#include "repose/refine.hpp"
#include "repose/render.hpp"
#include "repose/rig.hpp"
#include "repose/semspace.hpp"
