#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "eval.hpp"
#include "pixelio.hpp"

namespace strokeid::synth {

// Procedural glyph families standing in for scripts.
const std::vector<std::string>& family_names();

struct SynthSpec {
  int num_scripts = 4;                 // 2..6
  int samples_per_script = 100;        // written to <out>/train
  int test_samples_per_script = 0;     // written to <out>/test when > 0
  int height = pixelio::kLineHeight;   // fixed at 64
  int min_width = 64;
  int max_width = 512;
  double noise_sigma = 6.0;
  int style = 1;                       // 1 or 2: stroke weight / glyph scale / contrast regime
  int num_scenes = 0;                  // scene images written to <out>/scenes
  std::uint64_t seed = 0;
};

void validate(const SynthSpec& spec);

// Renders one line of random glyphs from `family`. Pure function of its
// arguments.
pixelio::GrayImage render_line(const SynthSpec& spec, int family, std::uint64_t seed);

struct ManifestEntry {
  std::filesystem::path path;  // relative to the corpus root
  std::string label;
};

// Writes <out>/<split>/<label>/<label>_NNNNN.png for the train (and test)
// splits plus <out>/manifest.tsv; scenes go to <out>/scenes when requested.
std::vector<ManifestEntry> generate_corpus(const SynthSpec& spec, const std::filesystem::path& out_dir);

struct Scene {
  pixelio::GrayImage image;
  std::vector<eval::BoxRecord> lines;
};

// 640x480 scene holding 1-4 non-overlapping rendered lines.
Scene render_scene(const SynthSpec& spec, std::uint64_t seed);

// Writes scene_NNNN.png and scene_NNNN.txt (x,y,w,h,script) pairs.
std::vector<std::filesystem::path> generate_scene_corpus(const SynthSpec& spec, const std::filesystem::path& out_dir);

}  // namespace strokeid::synth
