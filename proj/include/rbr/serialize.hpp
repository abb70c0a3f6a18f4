#pragma once

#include <filesystem>
#include <string>

#include "rbr/data.hpp"
#include "rbr/likelihood_bounds.hpp"
#include "rbr/recourse.hpp"
#include "rbr/sampler.hpp"

namespace rbr {

// JSON forms used for fixtures and CLI outputs. Parse failures raise malformed_file.
std::string dataset_to_json(const Dataset& data);
Dataset dataset_from_json(const std::string& text);

std::string sample_set_to_json(const LocalSampleSet& ls);
LocalSampleSet sample_set_from_json(const std::string& text);

std::string recourse_result_to_json(const RecourseResult& r, const RecourseConfig& cfg);
std::string component_to_json(const WorstCaseComponent& c);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace rbr
