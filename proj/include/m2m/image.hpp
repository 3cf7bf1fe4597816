#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "m2m/tensor.hpp"

namespace m2m {

// 8-bit interleaved image, channels = 1 (gray) or 3 (RGB).
struct Image8 {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<uint8_t> pixels;  // row-major, interleaved

  uint8_t& at(int y, int x, int c) { return pixels[(y * width + x) * channels + c]; }
  uint8_t at(int y, int x, int c) const { return pixels[(y * width + x) * channels + c]; }
};

Image8 read_png(const std::string& path);
void write_png(const std::string& path, const Image8& img);

// [-1,1] tensor (C,h,w) <-> 8-bit image. The mapping is v/127.5 - 1 on load
// and round((v+1)*127.5) with clipping on save.
Tensor image_to_tensor(const Image8& img);
Image8 tensor_to_image(const Tensor& t);

// Mask PNGs are single-channel 0/255.
Tensor mask_image_to_tensor(const Image8& img);
Image8 mask_tensor_to_image(const Tensor& t);

}  // namespace m2m
