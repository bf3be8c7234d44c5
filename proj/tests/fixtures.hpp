// Shared random fixtures for the unit tests.
#pragma once

#include <random>

#include "mavid/core_types.hpp"

namespace fixtures {

inline mavid::AudioClip random_audio(int codebooks, int length, int vocab, std::mt19937_64& rng) {
    std::uniform_int_distribution<int32_t> id(mavid::audio_special::count, vocab - 1);
    mavid::AudioClip clip(codebooks, length);
    for (int k = 0; k < codebooks; ++k)
        for (int t = 0; t < length; ++t) clip.at(k, t) = id(rng);
    return clip;
}

inline mavid::Mat random_mat(int rows, int cols, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> n(0.0, scale);
    mavid::Mat m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
    return m;
}

inline mavid::TokenList random_text(int n, int vocab, std::mt19937_64& rng) {
    std::uniform_int_distribution<int32_t> id(mavid::text_special::count, vocab - 1);
    mavid::TokenList out;
    for (int i = 0; i < n; ++i) out.push_back(mavid::Token::text(id(rng)));
    return out;
}

// Small model used by gradient checks and perturbation tests.
inline mavid::ModelConfig tiny_config() {
    mavid::ModelConfig c;
    c.d_model = 8;
    c.n_heads = 2;
    c.n_layers = 2;
    c.codebooks = 2;
    c.text_vocab = 12;
    c.audio_vocab = 10;
    c.audio_len = 8;
    c.latent_len = 4;
    c.latent_dim = 3;
    c.f_v_window = 2;
    c.f_a_window = 2;
    c.max_text_len = 4;
    c.diffusion_steps = 4;
    return c;
}

}  // namespace fixtures
