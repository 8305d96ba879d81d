#include "detfuse/image.hpp"

#include <fstream>

namespace detfuse {

namespace {

// Skips whitespace and '#' comments, then reads one ASCII token.
std::string next_token(std::istream& in) {
    std::string tok;
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else if (std::isspace(c)) {
            c = in.get();
        } else {
            break;
        }
    }
    while (c != EOF && !std::isspace(c)) {
        tok.push_back(static_cast<char>(c));
        c = in.get();
    }
    return tok;
}

}  // namespace

Image read_pnm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open image: " + path);

    const std::string magic = next_token(in);
    int channels = 0;
    if (magic == "P5") channels = 1;
    else if (magic == "P6") channels = 3;
    else throw std::runtime_error("unsupported PNM magic '" + magic + "' in " + path);

    const int w = std::stoi(next_token(in));
    const int h = std::stoi(next_token(in));
    const int maxval = std::stoi(next_token(in));
    if (maxval != 255) throw std::runtime_error("only maxval 255 supported: " + path);

    Image img(w, h, channels);
    in.read(reinterpret_cast<char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
    if (in.gcount() != static_cast<std::streamsize>(img.pixels.size())) {
        throw std::runtime_error("truncated image data: " + path);
    }
    return img;
}

void write_pnm(const Image& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write image: " + path);
    out << (img.channels == 3 ? "P6" : "P5") << "\n"
        << img.width << " " << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.pixels.data()),
              static_cast<std::streamsize>(img.pixels.size()));
    if (!out) throw std::runtime_error("failed writing image: " + path);
}

}  // namespace detfuse
