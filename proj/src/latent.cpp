#include "rhythmlab/latent.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

namespace rhythmlab {

static_assert(std::endian::native == std::endian::little,
              "latent payloads are little-endian; big-endian hosts unsupported");

namespace {

std::string strip_f32(const std::string& path) {
    if (path.size() > 4 && path.compare(path.size() - 4, 4, ".f32") == 0) {
        return path.substr(0, path.size() - 4);
    }
    return path;
}

} // namespace

void save_latent(const LatentSequence& z, const std::string& path_base) {
    const std::string base = strip_f32(path_base);
    {
        std::ofstream out(base + ".f32", std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("save_latent: cannot open " + base + ".f32");
        out.write(reinterpret_cast<const char*>(z.data.data()),
                  static_cast<std::streamsize>(z.data.size() * sizeof(float)));
        if (!out) throw IoError("save_latent: short write to " + base + ".f32");
    }
    nlohmann::json side;
    side["shape"] = {z.frames, z.channels};
    side["frame_rate"] = z.frame_rate;
    side["dtype"] = "f32le";
    std::ofstream js(base + ".json", std::ios::trunc);
    if (!js) throw IoError("save_latent: cannot open " + base + ".json");
    js << side.dump() << "\n";
}

LatentSequence load_latent(const std::string& path) {
    const std::string base = strip_f32(path);
    std::ifstream js(base + ".json");
    if (!js) throw IoError("load_latent: missing sidecar " + base + ".json");
    nlohmann::json side;
    try {
        js >> side;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("load_latent: bad sidecar " + base + ".json: " + e.what());
    }
    LatentSequence z;
    try {
        z.frames = side.at("shape").at(0).get<int>();
        z.channels = side.at("shape").at(1).get<int>();
        z.frame_rate = side.at("frame_rate").get<double>();
        if (side.at("dtype").get<std::string>() != "f32le") {
            throw IoError("load_latent: unsupported dtype in " + base + ".json");
        }
    } catch (const nlohmann::json::exception& e) {
        throw IoError("load_latent: bad sidecar fields in " + base + ".json: " + e.what());
    }
    if (z.frames < 0 || z.channels <= 0) {
        throw IoError("load_latent: invalid shape in " + base + ".json");
    }
    std::ifstream in(base + ".f32", std::ios::binary | std::ios::ate);
    if (!in) throw IoError("load_latent: missing payload " + base + ".f32");
    const auto bytes = static_cast<std::size_t>(in.tellg());
    const std::size_t expect =
        static_cast<std::size_t>(z.frames) * z.channels * sizeof(float);
    if (bytes != expect) {
        throw IoError("load_latent: payload size " + std::to_string(bytes) +
                      " does not match sidecar shape (" + std::to_string(expect) +
                      " bytes) for " + base);
    }
    z.data.resize(static_cast<std::size_t>(z.frames) * z.channels);
    in.seekg(0);
    in.read(reinterpret_cast<char*>(z.data.data()), static_cast<std::streamsize>(expect));
    if (!in) throw IoError("load_latent: short read from " + base + ".f32");
    return z;
}

} // namespace rhythmlab
