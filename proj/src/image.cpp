#include "latentprog/image.hpp"

#include "latentprog/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

namespace lp {

void clamp_unit(Image& img) {
    for (double& p : img.pixels) p = std::clamp(p, 0.0, 1.0);
}

void write_pgm(const std::filesystem::path& path, const Image& img, int maxval) {
    require(maxval >= 1 && maxval <= 65535, ErrorKind::InvalidArgument, "PGM maxval must be in [1, 65535]");
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), ErrorKind::IoError, "cannot open " + path.string() + " for writing");
    out << "P5\n" << img.width << ' ' << img.height << '\n' << maxval << '\n';
    std::string buffer;
    const bool wide = maxval > 255;
    buffer.reserve(img.size() * (wide ? 2 : 1));
    for (double p : img.pixels) {
        const auto v = static_cast<unsigned>(std::lround(std::clamp(p, 0.0, 1.0) * maxval));
        if (wide) buffer.push_back(static_cast<char>((v >> 8) & 0xff));
        buffer.push_back(static_cast<char>(v & 0xff));
    }
    out.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));
    require(static_cast<bool>(out), ErrorKind::IoError, "failed writing " + path.string());
}

namespace {

// Next whitespace-delimited header token, skipping '#' comments.
std::string header_token(std::istream& in) {
    std::string token;
    char c = 0;
    while (in.get(c)) {
        if (c == '#') {
            std::string ignored;
            std::getline(in, ignored);
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!token.empty()) break;
            continue;
        }
        token.push_back(c);
    }
    return token;
}

int header_int(std::istream& in, const std::string& what) {
    const std::string token = header_token(in);
    try {
        std::size_t used = 0;
        const int v = std::stoi(token, &used);
        if (used == token.size() && v > 0) return v;
    } catch (const std::exception&) {
    }
    fail(ErrorKind::FormatError, "PGM: bad " + what + " '" + token + "'");
}

} // namespace

Image read_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorKind::IoError, "cannot open " + path.string());
    require(header_token(in) == "P5", ErrorKind::FormatError, "PGM: " + path.string() + " is not binary P5");
    const int width = header_int(in, "width");
    const int height = header_int(in, "height");
    const int maxval = header_int(in, "maxval");
    require(maxval <= 65535, ErrorKind::FormatError, "PGM: maxval above 65535");
    // header_token consumed exactly one whitespace byte after maxval.
    Image img(height, width);
    const bool wide = maxval > 255;
    std::vector<unsigned char> raw(img.size() * (wide ? 2 : 1));
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    require(in.gcount() == static_cast<std::streamsize>(raw.size()), ErrorKind::FormatError,
            "PGM: truncated pixel data in " + path.string());
    for (std::size_t i = 0; i < img.size(); ++i) {
        const unsigned v = wide ? (static_cast<unsigned>(raw[2 * i]) << 8) | raw[2 * i + 1] : raw[i];
        img.pixels[i] = static_cast<double>(v) / maxval;
    }
    return img;
}

} // namespace lp
