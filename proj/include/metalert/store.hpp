#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "metalert/core.hpp"
#include "metalert/ingest.hpp"
#include "metalert/learning.hpp"

namespace metalert::store {

/// On-disk framework database: registry file, one rates file per sensor, one
/// weights file per signature, meta-alert logs, training histories.
struct StoreLayout {
    std::filesystem::path root;

    std::filesystem::path registry_file() const { return root / "registry.json"; }
    std::filesystem::path rates_dir() const { return root / "rates"; }
    std::filesystem::path weights_dir() const { return root / "weights"; }
    std::filesystem::path metas_dir() const { return root / "metas"; }
    std::filesystem::path history_dir() const { return root / "history"; }
    std::filesystem::path run_file() const { return root / "run.json"; }
};

void ensure_layout(const StoreLayout& layout);

/// Writes happen to a temp file in the same directory followed by an atomic
/// rename, so concurrent readers always see a consistent snapshot.
void write_atomic(const std::filesystem::path& path, const std::string& content);

void save_registry(const core::Registry& registry, const std::filesystem::path& path);
core::Registry load_registry(const std::filesystem::path& path);

void save_rates(const learning::RateTable& table, const StoreLayout& layout);
learning::RateTable load_rates(const StoreLayout& layout);
learning::RateTable load_rates_dir(const std::filesystem::path& dir);

struct WeightsRecord {
    core::MlpWeights weights;
    std::string trained_at;     // RFC 3339; honors SOURCE_DATE_EPOCH for reproducible output
    core::TrainConfig config;   // echo of the training configuration
};

void save_weights(const WeightsRecord& record, const StoreLayout& layout);
WeightsRecord load_weights(const StoreLayout& layout, const std::string& signature_id);
std::map<std::string, core::MlpWeights> load_all_weights(const std::filesystem::path& dir);

void save_metas(std::span<const core::MetaAlert> metas, const std::filesystem::path& path);
void append_metas(std::span<const core::MetaAlert> metas, const std::filesystem::path& path);
std::vector<core::MetaAlert> load_metas(const std::filesystem::path& path);

void save_history(const std::string& signature_id, std::span<const double> history,
                  const StoreLayout& layout);
std::vector<double> load_history(const StoreLayout& layout, const std::string& signature_id);

/// Timestamp used for trained_at: SOURCE_DATE_EPOCH when set, wall clock
/// otherwise.
std::string current_timestamp();

}  // namespace metalert::store
