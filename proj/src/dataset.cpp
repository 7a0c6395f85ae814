#include "tomonet/dataset.hpp"

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "tomonet/rawio.hpp"
#include "tomonet/rng.hpp"
#include "tomonet/threads.hpp"

namespace tomonet {

namespace fs = std::filesystem;
using nlohmann::json;

void SimConfig::validate() const {
  if (size < 32) throw config_error("sim: size must be >= 32");
  if (n_angles < 1) throw config_error("sim: n_angles must be >= 1");
  if (counts <= 0.0) throw config_error("sim: counts must be positive");
  if (n_bins != 0 && n_bins < default_n_bins(size) - 2)
    throw config_error("sim: n_bins smaller than the image diagonal");
  mix_kind(mix, 0);  // validates the mix string
}

namespace {

std::array<int, 3> parse_mix(const std::string& mix) {
  std::array<int, 3> ratio{};
  if (std::sscanf(mix.c_str(), "%d:%d:%d", &ratio[0], &ratio[1], &ratio[2]) !=
      3)
    throw config_error("mix must look like \"1:1:1\": " + mix);
  if (ratio[0] < 0 || ratio[1] < 0 || ratio[2] < 0 ||
      ratio[0] + ratio[1] + ratio[2] == 0)
    throw config_error("mix ratios must be nonnegative and not all zero: " +
                       mix);
  return ratio;
}

std::string record_file(int index, const char* part) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "rec_%05d_%s.raw", index, part);
  return buf;
}

}  // namespace

PhantomKind mix_kind(const std::string& mix, int index) {
  auto ratio = parse_mix(mix);
  int cycle = ratio[0] + ratio[1] + ratio[2];
  int pos = index % cycle;
  if (pos < ratio[0]) return PhantomKind::SheppLogan;
  if (pos < ratio[0] + ratio[1]) return PhantomKind::Ellipses;
  return PhantomKind::HotSpots;
}

TrainRecord make_record(const SimConfig& cfg, int index) {
  TrainRecord rec;
  rec.kind = mix_kind(cfg.mix, index);
  Phantom phantom =
      make_phantom(rec.kind, cfg.size, Rng::derive(cfg.seed, 2 * index));
  Sinogram clean = radon(phantom.image, cfg.n_angles, cfg.resolved_bins());
  double total = 0.0;
  for (double v : clean.data) total += v;

  Sinogram noisy =
      poisson_sample(clean, cfg.counts, Rng::derive(cfg.seed, 2 * index + 1));
  // Return the counts to the phantom's intensity units so the input image
  // approaches the target as counts grow; `counts` then controls only the
  // noise level.
  if (total > 0.0) {
    double unscale = total / cfg.counts;
    for (double& v : noisy.data) v *= unscale;
  }

  rec.input = fbp(noisy, cfg.size);
  rec.target = std::move(phantom.image);
  rec.labels = std::move(phantom.labels);
  rec.n_labels = phantom.n_labels;
  rec.sinogram = std::move(noisy);
  return rec;
}

std::vector<TrainRecord> make_dataset(int n_records, const SimConfig& cfg) {
  if (n_records < 1) throw config_error("make_dataset: n_records must be >= 1");
  cfg.validate();
  std::vector<TrainRecord> records(n_records);
  parallel_for(0, n_records,
               [&](int i) { records[i] = make_record(cfg, i); });
  return records;
}

void write_dataset(const std::string& dir,
                   const std::vector<TrainRecord>& records,
                   const SimConfig& cfg) {
  fs::create_directories(dir);
  json manifest{{"format", "tomonet-dataset-1"},
                {"size", cfg.size},
                {"n_angles", cfg.n_angles},
                {"n_bins", cfg.resolved_bins()},
                {"counts", cfg.counts},
                {"mix", cfg.mix},
                {"seed", cfg.seed},
                {"n_records", records.size()}};
  json list = json::array();
  for (size_t i = 0; i < records.size(); ++i) {
    const TrainRecord& rec = records[i];
    int idx = static_cast<int>(i);
    std::string input = record_file(idx, "input");
    std::string target = record_file(idx, "target");
    std::string labels = record_file(idx, "labels");
    std::string sino = record_file(idx, "sino");

    write_raw_image(dir + "/" + input, rec.input);
    write_raw_image(dir + "/" + target, rec.target);
    Tensor3 label_image(rec.target.height(), rec.target.width(), 1);
    for (size_t p = 0; p < rec.labels.size(); ++p)
      label_image.data()[p] = rec.labels[p];
    write_raw_image(dir + "/" + labels, label_image);
    write_sinogram(dir + "/" + sino, rec.sinogram);

    list.push_back({{"index", idx},
                    {"kind", to_string(rec.kind)},
                    {"n_labels", rec.n_labels},
                    {"input", input},
                    {"target", target},
                    {"labels", labels},
                    {"sinogram", sino}});
  }
  manifest["records"] = std::move(list);
  std::ofstream out(dir + "/manifest.json", std::ios::trunc);
  if (!out) throw data_error("cannot write manifest in " + dir);
  out << manifest.dump(2) << "\n";
}

LoadedDataset read_dataset(const std::string& dir, bool with_sinograms) {
  std::ifstream in(dir + "/manifest.json");
  if (!in) throw data_error("no manifest.json in " + dir);
  json manifest = json::parse(in, nullptr, false);
  if (manifest.is_discarded())
    throw data_error("malformed manifest.json in " + dir);
  if (manifest.value("format", "") != "tomonet-dataset-1")
    throw data_error("unknown dataset format in " + dir);

  LoadedDataset ds;
  ds.config.size = manifest.at("size").get<int>();
  ds.config.n_angles = manifest.at("n_angles").get<int>();
  ds.config.n_bins = manifest.at("n_bins").get<int>();
  ds.config.counts = manifest.at("counts").get<double>();
  ds.config.mix = manifest.at("mix").get<std::string>();
  ds.config.seed = manifest.at("seed").get<uint64_t>();

  for (const json& entry : manifest.at("records")) {
    TrainRecord rec;
    rec.kind = phantom_kind_from_string(entry.at("kind").get<std::string>());
    rec.n_labels = entry.at("n_labels").get<int>();
    rec.input = read_raw_image(dir + "/" + entry.at("input").get<std::string>());
    rec.target =
        read_raw_image(dir + "/" + entry.at("target").get<std::string>());
    Tensor3 label_image =
        read_raw_image(dir + "/" + entry.at("labels").get<std::string>());
    rec.labels.resize(label_image.size());
    for (size_t p = 0; p < rec.labels.size(); ++p)
      rec.labels[p] = static_cast<int>(label_image.data()[p]);
    if (with_sinograms)
      rec.sinogram =
          read_sinogram(dir + "/" + entry.at("sinogram").get<std::string>());
    ds.records.push_back(std::move(rec));
  }
  return ds;
}

}  // namespace tomonet
