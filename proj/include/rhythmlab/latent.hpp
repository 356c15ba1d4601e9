#pragma once

// Latent "songs": an L x C grid of real-valued frames at a fixed frame rate.
// On disk: raw little-endian f32 payload plus a JSON sidecar with the shape.

#include <cstdint>
#include <string>
#include <vector>

#include "rhythmlab/error.hpp"

namespace rhythmlab {

struct LatentSequence {
    int frames = 0;
    int channels = 0;
    double frame_rate = 21.5;
    std::vector<float> data; // row-major frames x channels

    LatentSequence() = default;
    LatentSequence(int frames_, int channels_, double frame_rate_)
        : frames(frames_), channels(channels_), frame_rate(frame_rate_),
          data(static_cast<std::size_t>(frames_) * channels_, 0.0f) {}

    std::size_t size() const { return data.size(); }

    float* frame(int j) { return data.data() + static_cast<std::size_t>(j) * channels; }
    const float* frame(int j) const {
        return data.data() + static_cast<std::size_t>(j) * channels;
    }

    void require_same_shape(const LatentSequence& other, const char* op) const {
        if (frames != other.frames || channels != other.channels) {
            throw DimensionError(std::string(op) + ": latent shapes disagree: [" +
                                 std::to_string(frames) + "," + std::to_string(channels) +
                                 "] vs [" + std::to_string(other.frames) + "," +
                                 std::to_string(other.channels) + "]");
        }
    }
};

/// Writes `<path_base>.f32` (payload) and `<path_base>.json` (sidecar).
void save_latent(const LatentSequence& z, const std::string& path_base);

/// Loads from either the payload path (`...f32`) or the path base.
LatentSequence load_latent(const std::string& path);

} // namespace rhythmlab
