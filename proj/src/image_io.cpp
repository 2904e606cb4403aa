#include "manta/image_io.hpp"

#include <jpeglib.h>
#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <vector>

#include "manta/errors.hpp"

namespace manta {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.string().c_str(), mode));
  if (!f) throw DataError("cannot open " + path.string());
  return f;
}

std::string lower_ext(const std::filesystem::path& path) {
  std::string e = path.extension().string();
  std::transform(e.begin(), e.end(), e.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return e;
}

// Reads a PNG into interleaved rows. Gray/palette/alpha inputs are expanded
// so callers only ever see 8-bit RGB or 16-bit gray.
struct PngData {
  png_uint_32 width = 0, height = 0;
  int bit_depth = 0, channels = 0;
  std::vector<std::vector<png_byte>> rows;
};

PngData read_png_file(const std::filesystem::path& path, bool want_gray16) {
  FilePtr f = open_file(path, "rb");
  png_byte header[8];
  if (std::fread(header, 1, 8, f.get()) != 8 || png_sig_cmp(header, 0, 8))
    throw DataError(path.string() + ": not a PNG file");

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DataError(path.string() + ": libpng init failed");
  }
  PngData out;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DataError(path.string() + ": PNG decode error");
  }
  png_init_io(png, f.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  png_uint_32 w, h;
  int depth, color;
  png_get_IHDR(png, info, &w, &h, &depth, &color, nullptr, nullptr, nullptr);

  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_strip_alpha(png);
  if (want_gray16) {
    if (color & PNG_COLOR_MASK_COLOR) png_set_rgb_to_gray_fixed(png, 1, -1, -1);
#if defined(PNG_READ_SWAP_SUPPORTED)
    if (depth == 16) png_set_swap(png);  // PNG is big-endian on disk
#endif
  } else {
    if (depth == 16) png_set_strip_16(png);
    if (!(color & PNG_COLOR_MASK_COLOR)) png_set_gray_to_rgb(png);
  }
  png_read_update_info(png, info);

  out.width = w;
  out.height = h;
  out.bit_depth = png_get_bit_depth(png, info);
  out.channels = png_get_channels(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  out.rows.assign(h, std::vector<png_byte>(rowbytes));
  std::vector<png_bytep> row_ptrs(h);
  for (png_uint_32 y = 0; y < h; ++y) row_ptrs[y] = out.rows[y].data();
  png_read_image(png, row_ptrs.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

Image read_png_rgb(const std::filesystem::path& path) {
  PngData d = read_png_file(path, /*want_gray16=*/false);
  if (d.channels != 3 || d.bit_depth != 8)
    throw DataError(path.string() + ": unexpected PNG layout after expansion");
  Image im(d.height, d.width);
  for (png_uint_32 y = 0; y < d.height; ++y)
    for (png_uint_32 x = 0; x < d.width; ++x)
      for (int k = 0; k < 3; ++k)
        im.ch[k](y, x) = d.rows[y][3 * x + k] / 255.0;
  return im;
}

struct JpegErrorMgr {
  jpeg_error_mgr pub;
  jmp_buf jump;
  char message[JMSG_LENGTH_MAX] = {};
};

void jpeg_error_exit(j_common_ptr ci) {
  auto* err = reinterpret_cast<JpegErrorMgr*>(ci->err);
  (*ci->err->format_message)(ci, err->message);
  longjmp(err->jump, 1);
}

Image read_jpeg_rgb(const std::filesystem::path& path) {
  FilePtr f = open_file(path, "rb");
  jpeg_decompress_struct cinfo;
  JpegErrorMgr jerr;
  cinfo.err = jpeg_std_error(&jerr.pub);
  jerr.pub.error_exit = jpeg_error_exit;
  if (setjmp(jerr.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw DataError(path.string() + ": JPEG decode error: " + jerr.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, f.get());
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  Image im(cinfo.output_height, cinfo.output_width);
  std::vector<JSAMPLE> row(static_cast<std::size_t>(cinfo.output_width) * 3);
  JSAMPROW rp = row.data();
  while (cinfo.output_scanline < cinfo.output_height) {
    const JDIMENSION y = cinfo.output_scanline;
    jpeg_read_scanlines(&cinfo, &rp, 1);
    for (JDIMENSION x = 0; x < cinfo.output_width; ++x)
      for (int k = 0; k < 3; ++k) im.ch[k](y, x) = row[3 * x + k] / 255.0;
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return im;
}

}  // namespace

Image read_image(const std::filesystem::path& path) {
  const std::string ext = lower_ext(path);
  if (ext == ".png") return read_png_rgb(path);
  if (ext == ".jpg" || ext == ".jpeg") return read_jpeg_rgb(path);
  throw DataError(path.string() + ": unsupported image extension '" + ext + "'");
}

void write_png(const std::filesystem::path& path, const Image& im) {
  if (im.empty()) throw std::invalid_argument("write_png: empty image");
  FilePtr f = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw DataError(path.string() + ": libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw DataError(path.string() + ": PNG encode error");
  }
  png_init_io(png, f.get());
  const auto h = static_cast<png_uint_32>(im.height());
  const auto w = static_cast<png_uint_32>(im.width());
  png_set_IHDR(png, info, w, h, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_byte> row(static_cast<std::size_t>(w) * 3);
  for (png_uint_32 y = 0; y < h; ++y) {
    for (png_uint_32 x = 0; x < w; ++x)
      for (int k = 0; k < 3; ++k) {
        const double v = std::clamp(im.ch[k](y, x), 0.0, 1.0);
        row[3 * x + k] = static_cast<png_byte>(std::lround(v * 255.0));
      }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

DepthMap read_depth(const std::filesystem::path& path, double depth_scale) {
  const std::string ext = lower_ext(path);
  if (ext == ".pfm") return read_pfm(path);
  if (ext != ".png")
    throw DataError(path.string() + ": depth must be 16-bit PNG or PFM");
  PngData d = read_png_file(path, /*want_gray16=*/true);
  DepthMap depth(d.height, d.width);
  if (d.bit_depth == 16) {
    for (png_uint_32 y = 0; y < d.height; ++y) {
      const auto* p = reinterpret_cast<const std::uint16_t*>(d.rows[y].data());
      for (png_uint_32 x = 0; x < d.width; ++x)
        depth(y, x) = p[x] / 65535.0 * depth_scale;
    }
  } else if (d.bit_depth == 8) {
    for (png_uint_32 y = 0; y < d.height; ++y)
      for (png_uint_32 x = 0; x < d.width; ++x)
        depth(y, x) = d.rows[y][x] / 255.0 * depth_scale;
  } else {
    throw DataError(path.string() + ": unsupported depth PNG bit depth");
  }
  return depth;
}

void write_depth_png(const std::filesystem::path& path, const DepthMap& depth,
                     double depth_scale) {
  if (depth.size() == 0) throw std::invalid_argument("write_depth_png: empty depth map");
  if (depth_scale <= 0) throw std::invalid_argument("write_depth_png: depth_scale must be > 0");
  FilePtr f = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw DataError(path.string() + ": libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw DataError(path.string() + ": PNG encode error");
  }
  png_init_io(png, f.get());
  const auto h = static_cast<png_uint_32>(depth.rows());
  const auto w = static_cast<png_uint_32>(depth.cols());
  png_set_IHDR(png, info, w, h, 16, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_byte> row(static_cast<std::size_t>(w) * 2);
  for (png_uint_32 y = 0; y < h; ++y) {
    for (png_uint_32 x = 0; x < w; ++x) {
      const double v = std::clamp(depth(y, x) / depth_scale, 0.0, 1.0);
      const auto q = static_cast<std::uint16_t>(std::lround(v * 65535.0));
      row[2 * x] = static_cast<png_byte>(q >> 8);  // big-endian per PNG spec
      row[2 * x + 1] = static_cast<png_byte>(q & 0xff);
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

DepthMap read_pfm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::string magic;
  in >> magic;
  if (magic != "Pf") throw DataError(path.string() + ": expected grayscale PFM (Pf)");
  long w = 0, h = 0;
  double scale = 0;
  in >> w >> h >> scale;
  in.get();  // single whitespace before the raster
  if (w <= 0 || h <= 0 || scale == 0) throw DataError(path.string() + ": bad PFM header");
  const bool little_endian = scale < 0;
  if (!little_endian) throw DataError(path.string() + ": big-endian PFM not supported");
  DepthMap depth(h, w);
  std::vector<float> row(static_cast<std::size_t>(w));
  // PFM stores rows bottom-up.
  for (long y = h - 1; y >= 0; --y) {
    in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(w * sizeof(float)));
    if (!in) throw DataError(path.string() + ": truncated PFM raster");
    for (long x = 0; x < w; ++x) depth(y, x) = row[static_cast<std::size_t>(x)];
  }
  return depth;
}

void write_pfm(const std::filesystem::path& path, const DepthMap& depth) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << "Pf\n" << depth.cols() << " " << depth.rows() << "\n-1.0\n";
  std::vector<float> row(static_cast<std::size_t>(depth.cols()));
  for (Eigen::Index y = depth.rows() - 1; y >= 0; --y) {
    for (Eigen::Index x = 0; x < depth.cols(); ++x)
      row[static_cast<std::size_t>(x)] = static_cast<float>(depth(y, x));
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size() * sizeof(float)));
  }
  if (!out) throw DataError("write failed: " + path.string());
}

}  // namespace manta
