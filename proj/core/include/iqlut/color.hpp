#pragma once

#include "iqlut/image.hpp"

namespace iqlut {

struct YCbCrPlanes {
  ImagePlane y;
  ImagePlane cb;
  ImagePlane cr;
};

struct RgbPlanes {
  ImagePlane r;
  ImagePlane g;
  ImagePlane b;
};

// BT.601 with the studio-swing mapping used by the SR evaluation tooling
// (MATLAB rgb2ycbcr): Y spans [16, 235]/255, chroma [16, 240]/255, neutral
// chroma 128/255. Inputs and outputs are unit-normalized; no rounding.
YCbCrPlanes rgb_to_ycbcr(const ImagePlane& r, const ImagePlane& g, const ImagePlane& b);
RgbPlanes ycbcr_to_rgb(const ImagePlane& y, const ImagePlane& cb, const ImagePlane& cr);

/// Luma only; identical to rgb_to_ycbcr(...).y.
ImagePlane rgb_to_y(const ImagePlane& r, const ImagePlane& g, const ImagePlane& b);

}  // namespace iqlut
