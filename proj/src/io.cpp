// Copyright 2026 The nucfuse Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "nucfuse/io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace nucfuse::io {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr int kZlibLevel = 6;

/// libpng state for one encode or decode. Errors longjmp back to the caller,
/// which then throws with the captured message.
struct PngContext {
    png_structp png = nullptr;
    png_infop info = nullptr;
    bool writing = false;
    char message[256] = "libpng error";

    ~PngContext() {
        if (writing) {
            png_destroy_write_struct(&png, info ? &info : nullptr);
        } else if (png) {
            png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
        }
    }
};

void on_png_error(png_structp png, png_const_charp msg) {
    auto* ctx = static_cast<PngContext*>(png_get_error_ptr(png));
    std::snprintf(ctx->message, sizeof(ctx->message), "%s", msg);
    std::longjmp(png_jmpbuf(png), 1);
}

void on_png_warning(png_structp, png_const_charp) {}

void on_png_write(png_structp png, png_bytep data, png_size_t len) {
    auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
    out->insert(out->end(), data, data + len);
}

void on_png_flush(png_structp) {}

struct ReadCursor {
    const std::vector<std::uint8_t>* bytes;
    std::size_t offset;
};

void on_png_read(png_structp png, png_bytep data, png_size_t len) {
    auto* cur = static_cast<ReadCursor*>(png_get_io_ptr(png));
    if (cur->offset + len > cur->bytes->size()) png_error(png, "unexpected end of PNG data");
    std::memcpy(data, cur->bytes->data() + cur->offset, len);
    cur->offset += len;
}

/// rows: height pointers into a buffer already laid out as PNG expects.
std::vector<std::uint8_t> encode(int width, int height, int bit_depth, int color_type,
                                 const std::vector<png_bytep>& rows) {
    if (width <= 0 || height <= 0) throw IoError("cannot encode an empty raster as PNG");
    std::vector<std::uint8_t> out;
    PngContext ctx;
    ctx.writing = true;
    ctx.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &ctx, on_png_error, on_png_warning);
    if (!ctx.png) throw IoError("png_create_write_struct failed");
    ctx.info = png_create_info_struct(ctx.png);
    if (!ctx.info) throw IoError("png_create_info_struct failed");
    if (setjmp(png_jmpbuf(ctx.png))) throw IoError(std::string("PNG encode failed: ") + ctx.message);

    png_set_write_fn(ctx.png, &out, on_png_write, on_png_flush);
    png_set_compression_level(ctx.png, kZlibLevel);
    png_set_IHDR(ctx.png, ctx.info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), bit_depth,
                 color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(ctx.png, ctx.info);
    png_write_image(ctx.png, const_cast<png_bytepp>(rows.data()));
    png_write_end(ctx.png, nullptr);
    return out;
}

struct Decoded {
    int width = 0;
    int height = 0;
    int bit_depth = 0;
    int channels = 0;
    std::vector<std::uint8_t> data;  // tightly packed rows
};

Decoded decode(const std::vector<std::uint8_t>& bytes, bool want_rgb) {
    if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) throw IoError("not a PNG file");
    Decoded out;
    std::vector<png_bytep> rows;
    ReadCursor cursor{&bytes, 0};
    PngContext ctx;
    ctx.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &ctx, on_png_error, on_png_warning);
    if (!ctx.png) throw IoError("png_create_read_struct failed");
    ctx.info = png_create_info_struct(ctx.png);
    if (!ctx.info) throw IoError("png_create_info_struct failed");
    if (setjmp(png_jmpbuf(ctx.png))) throw IoError(std::string("PNG decode failed: ") + ctx.message);

    png_set_read_fn(ctx.png, &cursor, on_png_read);
    png_read_info(ctx.png, ctx.info);
    const int color_type = png_get_color_type(ctx.png, ctx.info);
    const int depth = png_get_bit_depth(ctx.png, ctx.info);

    if (want_rgb) {
        if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(ctx.png);
        if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA) {
            if (depth < 8) png_set_expand_gray_1_2_4_to_8(ctx.png);
            png_set_gray_to_rgb(ctx.png);
        }
        if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(ctx.png);
        if (depth == 16) png_set_strip_16(ctx.png);
    } else {
        if (color_type != PNG_COLOR_TYPE_GRAY) throw IoError("label raster must be a single-channel grayscale PNG");
        if (depth < 8) png_set_expand_gray_1_2_4_to_8(ctx.png);
    }
    png_read_update_info(ctx.png, ctx.info);

    out.width = static_cast<int>(png_get_image_width(ctx.png, ctx.info));
    out.height = static_cast<int>(png_get_image_height(ctx.png, ctx.info));
    out.bit_depth = png_get_bit_depth(ctx.png, ctx.info);
    out.channels = png_get_channels(ctx.png, ctx.info);
    const std::size_t stride = png_get_rowbytes(ctx.png, ctx.info);
    out.data.resize(stride * static_cast<std::size_t>(out.height));
    rows.resize(static_cast<std::size_t>(out.height));
    for (int y = 0; y < out.height; ++y) rows[static_cast<std::size_t>(y)] = out.data.data() + stride * y;
    png_read_image(ctx.png, rows.data());
    png_read_end(ctx.png, nullptr);
    return out;
}

std::string dims(int w, int h) { return std::to_string(w) + "x" + std::to_string(h); }

json optional_vector(const metrics::ClassVector& v) {
    json arr = json::array();
    for (const auto& x : v) arr.push_back(x ? json(*x) : json(nullptr));
    return arr;
}

}  // namespace

std::vector<std::uint8_t> encode_png_rgb(const RgbImage& image) {
    std::vector<png_bytep> rows(static_cast<std::size_t>(image.height));
    for (int y = 0; y < image.height; ++y) rows[static_cast<std::size_t>(y)] = const_cast<png_bytep>(image.at(0, y));
    return encode(image.width, image.height, 8, PNG_COLOR_TYPE_RGB, rows);
}

std::vector<std::uint8_t> encode_png_gray8(const ClassRaster& raster) {
    std::vector<png_bytep> rows(static_cast<std::size_t>(raster.height));
    for (int y = 0; y < raster.height; ++y) rows[static_cast<std::size_t>(y)] = const_cast<png_bytep>(&raster.at(0, y));
    return encode(raster.width, raster.height, 8, PNG_COLOR_TYPE_GRAY, rows);
}

std::vector<std::uint8_t> encode_png_gray16(const InstanceRaster& raster) {
    std::vector<std::uint8_t> buffer(raster.size() * 2);
    for (int y = 0; y < raster.height; ++y) {
        for (int x = 0; x < raster.width; ++x) {
            const auto v = raster.at(x, y);
            if (v > kMaxInstanceId)
                throw IoError("instance id " + std::to_string(v) + " at (" + std::to_string(x) + "," +
                              std::to_string(y) + ") exceeds the 16-bit limit of " + std::to_string(kMaxInstanceId));
            const std::size_t i = (static_cast<std::size_t>(y) * raster.width + x) * 2;
            buffer[i] = static_cast<std::uint8_t>(v >> 8);  // PNG samples are big-endian
            buffer[i + 1] = static_cast<std::uint8_t>(v & 0xFF);
        }
    }
    std::vector<png_bytep> rows(static_cast<std::size_t>(raster.height));
    for (int y = 0; y < raster.height; ++y)
        rows[static_cast<std::size_t>(y)] = buffer.data() + static_cast<std::size_t>(y) * raster.width * 2;
    return encode(raster.width, raster.height, 16, PNG_COLOR_TYPE_GRAY, rows);
}

RgbImage decode_png_rgb(const std::vector<std::uint8_t>& bytes) {
    auto d = decode(bytes, true);
    if (d.channels != 3 || d.bit_depth != 8) throw IoError("unsupported RGB PNG layout");
    RgbImage img(d.width, d.height);
    img.pixels = std::move(d.data);
    return img;
}

InstanceRaster decode_png_gray(const std::vector<std::uint8_t>& bytes) {
    const auto d = decode(bytes, false);
    if (d.channels != 1) throw IoError("label raster must have one channel");
    InstanceRaster r(d.width, d.height);
    for (std::size_t i = 0; i < r.size(); ++i)
        r.data[i] = d.bit_depth == 16 ? (static_cast<std::uint32_t>(d.data[2 * i]) << 8) | d.data[2 * i + 1] : d.data[i];
    return r;
}

std::vector<std::uint8_t> read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("missing file: " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + path.string());
}

void write_text(const fs::path& path, const std::string& text) {
    write_file(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

ScenePackage read_scene(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw IoError("scene package not found: " + dir.string());
    const auto meta_bytes = read_file(dir / "meta.json");
    json meta;
    try {
        meta = json::parse(meta_bytes.begin(), meta_bytes.end());
    } catch (const json::exception& e) {
        throw IoError("malformed meta.json in " + dir.string() + ": " + e.what());
    }
    int width = 0;
    int height = 0;
    ScenePackage pkg;
    try {
        const int version = meta.at("format_version").get<int>();
        if (version != kFormatVersion)
            throw IoError("unsupported package format version " + std::to_string(version) + " in " + dir.string());
        width = meta.at("width").get<int>();
        height = meta.at("height").get<int>();
        pkg.producer = meta.value("producer", std::string("ground_truth"));
    } catch (const json::exception& e) {
        throw IoError("incomplete meta.json in " + dir.string() + ": " + e.what());
    }

    const auto inst = decode_png_gray(read_file(dir / "instance.png"));
    const auto cls = decode_png_gray(read_file(dir / "class.png"));
    if (inst.width != cls.width || inst.height != cls.height)
        throw ValidationError("dimension mismatch: instance.png is " + dims(inst.width, inst.height) +
                              " but class.png is " + dims(cls.width, cls.height));
    if (inst.width != width || inst.height != height)
        throw ValidationError("dimension mismatch: instance.png is " + dims(inst.width, inst.height) +
                              " but meta.json declares " + dims(width, height));

    pkg.scene = LabeledScene(width, height);
    pkg.scene.instance_map = inst;
    for (std::size_t i = 0; i < cls.size(); ++i) {
        if (cls.data[i] > static_cast<std::uint32_t>(kNumClasses)) {
            const auto x = static_cast<int>(i % static_cast<std::size_t>(width));
            const auto y = static_cast<int>(i / static_cast<std::size_t>(width));
            throw ValidationError("class.png value " + std::to_string(cls.data[i]) + " out of range at (" +
                                  std::to_string(x) + "," + std::to_string(y) + ")");
        }
        pkg.scene.class_map.data[i] = static_cast<std::uint8_t>(cls.data[i]);
    }
    validate_scene(pkg.scene);

    if (fs::exists(dir / "image.png")) {
        auto img = decode_png_rgb(read_file(dir / "image.png"));
        if (img.width != width || img.height != height)
            throw ValidationError("dimension mismatch: image.png is " + dims(img.width, img.height) +
                                  " but instance.png is " + dims(width, height));
        pkg.image = std::move(img);
    }
    return pkg;
}

void write_scene(const fs::path& dir, const LabeledScene& scene, const RgbImage* image, const std::string& producer) {
    validate_scene(scene);
    if (image && (image->width != scene.width || image->height != scene.height))
        throw ValidationError("image is " + dims(image->width, image->height) + " but scene is " +
                              dims(scene.width, scene.height));
    // Encode everything before touching the filesystem so a bad scene leaves no partial package.
    const auto inst = encode_png_gray16(scene.instance_map);
    const auto cls = encode_png_gray8(scene.class_map);
    const auto img = image ? encode_png_rgb(*image) : std::vector<std::uint8_t>{};

    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    write_file(dir / "instance.png", inst);
    write_file(dir / "class.png", cls);
    if (image) {
        write_file(dir / "image.png", img);
    } else {
        fs::remove(dir / "image.png", ec);
    }
    json meta = {{"format_version", kFormatVersion}, {"width", scene.width}, {"height", scene.height},
                 {"producer", producer}};
    write_text(dir / "meta.json", meta.dump(2) + "\n");
}

std::vector<std::string> list_scenes(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_directory() && fs::exists(entry.path() / "meta.json"))
            names.push_back(entry.path().filename().string());
    std::sort(names.begin(), names.end());
    return names;
}

std::string report_to_json(const metrics::MetricsReport& report) {
    json j;
    j["pq"] = report.pq;
    j["pq_plus"] = optional_vector(report.pq_plus);
    j["mpq_plus"] = report.mpq_plus;
    j["r2"] = optional_vector(report.r2);
    j["r2_mean"] = report.r2_mean ? json(*report.r2_mean) : json(nullptr);
    j["per_scene_counts"] = report.pred_counts;
    return j.dump(2) + "\n";
}

std::string counts_to_csv(const std::vector<std::string>& scene_ids, const std::vector<metrics::CountVector>& counts) {
    if (scene_ids.size() != counts.size()) throw ValidationError("scene id / count list length mismatch");
    std::ostringstream out;
    out << "scene_id,c1,c2,c3,c4,c5,c6\n";
    for (std::size_t i = 0; i < counts.size(); ++i) {
        out << scene_ids[i];
        for (auto c : counts[i]) out << ',' << c;
        out << '\n';
    }
    return out.str();
}

std::string detections_to_json(const DetectionSet& set, Source source) {
    json dets = json::array();
    for (const auto& d : set.detections) {
        // Row runs [y, x_begin, x_end) reconstruct the mask exactly.
        json runs = json::array();
        for (std::size_t i = 0; i < d.mask.size();) {
            std::size_t j = i + 1;
            while (j < d.mask.size() && d.mask[j].y == d.mask[i].y && d.mask[j].x == d.mask[j - 1].x + 1) ++j;
            runs.push_back({d.mask[i].y, d.mask[i].x, d.mask[j - 1].x + 1});
            i = j;
        }
        dets.push_back({{"id", d.id},
                        {"label", d.label.value()},
                        {"class_name", std::string(class_name(d.label))},
                        {"bbox", {d.bbox.x0, d.bbox.y0, d.bbox.x1, d.bbox.y1}},
                        {"area", d.mask.size()},
                        {"runs", std::move(runs)}});
    }
    json j = {{"width", set.width}, {"height", set.height}, {"source", std::string(to_string(source))},
              {"detections", std::move(dets)}};
    return j.dump(2) + "\n";
}

bool is_boundary(const LabeledScene& scene, int x, int y) {
    const auto id = scene.instance_map.at(x, y);
    if (id == 0) return false;
    constexpr std::array<Pixel, 4> steps = {{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};
    for (const auto& s : steps) {
        const int nx = x + s.x;
        const int ny = y + s.y;
        if (!scene.instance_map.contains(nx, ny) || scene.instance_map.at(nx, ny) != id) return true;
    }
    return false;
}

RgbImage render_overlay(const RgbImage& image, const LabeledScene& scene) {
    if (image.width != scene.width || image.height != scene.height)
        throw ValidationError("overlay image is " + dims(image.width, image.height) + " but scene is " +
                              dims(scene.width, scene.height));
    validate_scene(scene);
    RgbImage out = image;
    for (int y = 0; y < scene.height; ++y) {
        for (int x = 0; x < scene.width; ++x) {
            const auto c = scene.class_map.at(x, y);
            if (c == 0) continue;
            const auto& colour = kPalette[c - 1];
            auto* px = out.at(x, y);
            const bool edge = is_boundary(scene, x, y);
            for (int ch = 0; ch < 3; ++ch) {
                px[ch] = edge ? colour[ch]
                              : static_cast<std::uint8_t>(
                                    std::lround((1.0 - kOverlayAlpha) * px[ch] + kOverlayAlpha * colour[ch]));
            }
        }
    }
    return out;
}

}  // namespace nucfuse::io
