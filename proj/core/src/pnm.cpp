#include "soe/pnm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include "soe/errors.hpp"

namespace soe {

namespace {

unsigned char quantize(double v) {
    const double clamped = std::clamp(v, 0.0, 1.0);
    return static_cast<unsigned char>(std::lround(clamped * 255.0));
}

// Reads one whitespace-delimited header token, skipping '#' comments.
std::string next_token(std::istream& in) {
    std::string tok;
    int c = in.get();
    while (c != EOF && (std::isspace(c) || c == '#')) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        }
        c = in.get();
    }
    while (c != EOF && !std::isspace(c)) {
        tok.push_back(static_cast<char>(c));
        c = in.get();
    }
    return tok;
}

struct PnmHeader {
    std::int64_t w = 0;
    std::int64_t h = 0;
};

PnmHeader read_header(std::ifstream& in, const char* magic, const std::filesystem::path& path) {
    if (next_token(in) != magic) {
        throw IoError("not a " + std::string(magic) + " file: " + path.string());
    }
    PnmHeader hd;
    try {
        hd.w = std::stoll(next_token(in));
        hd.h = std::stoll(next_token(in));
        const long maxval = std::stol(next_token(in));
        if (maxval != 255) {
            throw IoError("only 8-bit PNM files are supported: " + path.string());
        }
    } catch (const std::logic_error&) {
        throw IoError("malformed PNM header: " + path.string());
    }
    if (hd.w < 1 || hd.h < 1) {
        throw IoError("invalid PNM dimensions: " + path.string());
    }
    return hd;
}

}  // namespace

void write_ppm(const Tensor& image, const std::filesystem::path& path) {
    if (image.rank() != 3 || image.extent(0) != 3) {
        throw DimensionError("write_ppm expects a [3, H, W] tensor");
    }
    const std::int64_t h = image.extent(1), w = image.extent(2);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open for writing: " + path.string());
    }
    out << "P6\n" << w << " " << h << "\n255\n";
    std::vector<unsigned char> row(static_cast<std::size_t>(w) * 3);
    for (std::int64_t y = 0; y < h; ++y) {
        for (std::int64_t x = 0; x < w; ++x) {
            for (int c = 0; c < 3; ++c) {
                row[static_cast<std::size_t>(x * 3 + c)] = quantize(image.at(c, y, x));
            }
        }
        out.write(reinterpret_cast<const char*>(row.data()),
                  static_cast<std::streamsize>(row.size()));
    }
    if (!out) {
        throw IoError("write failed: " + path.string());
    }
}

Tensor read_ppm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open: " + path.string());
    }
    const PnmHeader hd = read_header(in, "P6", path);
    std::vector<unsigned char> raw(static_cast<std::size_t>(hd.w * hd.h * 3));
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!in) {
        throw IoError("truncated PPM payload: " + path.string());
    }
    Tensor image({3, hd.h, hd.w});
    for (std::int64_t y = 0; y < hd.h; ++y) {
        for (std::int64_t x = 0; x < hd.w; ++x) {
            for (int c = 0; c < 3; ++c) {
                image.at(c, y, x) =
                    raw[static_cast<std::size_t>((y * hd.w + x) * 3 + c)] / 255.0;
            }
        }
    }
    return image;
}

void write_pgm(const Tensor& gray, const std::filesystem::path& path) {
    if (gray.rank() != 2) {
        throw DimensionError("write_pgm expects a [H, W] tensor");
    }
    const std::int64_t h = gray.extent(0), w = gray.extent(1);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open for writing: " + path.string());
    }
    out << "P5\n" << w << " " << h << "\n255\n";
    std::vector<unsigned char> row(static_cast<std::size_t>(w));
    for (std::int64_t y = 0; y < h; ++y) {
        for (std::int64_t x = 0; x < w; ++x) {
            row[static_cast<std::size_t>(x)] = quantize(gray.at(y, x));
        }
        out.write(reinterpret_cast<const char*>(row.data()),
                  static_cast<std::streamsize>(row.size()));
    }
    if (!out) {
        throw IoError("write failed: " + path.string());
    }
}

Tensor read_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open: " + path.string());
    }
    const PnmHeader hd = read_header(in, "P5", path);
    std::vector<unsigned char> raw(static_cast<std::size_t>(hd.w * hd.h));
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!in) {
        throw IoError("truncated PGM payload: " + path.string());
    }
    Tensor gray({hd.h, hd.w});
    for (std::int64_t i = 0; i < gray.size(); ++i) {
        gray[i] = raw[static_cast<std::size_t>(i)] / 255.0;
    }
    return gray;
}

}  // namespace soe
