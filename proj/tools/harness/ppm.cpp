#include "ppm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

namespace dcgs {

namespace {

[[noreturn]] void fail(const std::filesystem::path &path, const std::string &what) {
    throw std::runtime_error(path.string() + ": " + what);
}

// Reads one header integer, skipping whitespace and '#' comments.
int read_header_int(std::istream &in, const std::filesystem::path &path) {
    int ch;
    while ((ch = in.peek()) != EOF) {
        if (ch == '#') {
            std::string line;
            std::getline(in, line);
        } else if (std::isspace(ch)) {
            in.get();
        } else {
            break;
        }
    }
    int v = 0;
    if (!(in >> v)) fail(path, "truncated PPM header");
    return v;
}

}  // namespace

void write_ppm(const std::filesystem::path &path, const Raster &image) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(path, "cannot open for writing");
    out << (image.channels() == 1 ? "P5" : "P6") << '\n' << image.width() << ' ' << image.height() << "\n255\n";
    std::vector<unsigned char> bytes(image.size());
    const auto data = image.data();
    for (std::size_t i = 0; i < data.size(); ++i)
        bytes[i] = static_cast<unsigned char>(std::lround(std::clamp(data[i], 0.0, 1.0) * 255.0));
    out.write(reinterpret_cast<const char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(path, "write failed");
}

Raster read_ppm(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(path, "cannot open for reading");
    char magic[2] = {0, 0};
    in.read(magic, 2);
    if (!in || magic[0] != 'P' || (magic[1] != '5' && magic[1] != '6')) fail(path, "not a binary PGM/PPM (P5/P6)");
    const int channels = magic[1] == '5' ? 1 : 3;
    const int width = read_header_int(in, path);
    const int height = read_header_int(in, path);
    const int maxval = read_header_int(in, path);
    if (width <= 0 || height <= 0) fail(path, "invalid dimensions");
    if (maxval <= 0 || maxval > 65535) fail(path, "invalid maxval");
    in.get();  // single whitespace before the raster

    Raster img(width, height, channels);
    const std::size_t n = img.size();
    const int bytes_per = maxval < 256 ? 1 : 2;
    std::vector<unsigned char> buf(n * bytes_per);
    in.read(reinterpret_cast<char *>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (static_cast<std::size_t>(in.gcount()) != buf.size()) fail(path, "truncated pixel data");
    auto data = img.data();
    for (std::size_t i = 0; i < n; ++i) {
        const int v = bytes_per == 1 ? buf[i] : (buf[2 * i] << 8) | buf[2 * i + 1];
        data[i] = static_cast<double>(v) / maxval;
    }
    return img;
}

}  // namespace dcgs
