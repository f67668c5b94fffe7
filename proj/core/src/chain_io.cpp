#include "sulp/chain_io.hpp"

#include "sulp/errors.hpp"

#include <fstream>
#include <iomanip>

namespace sulp {
namespace {

constexpr int kFormatVersion = 1;

struct Block {
  const char* name;
  MatrixXd Chain::*matrix;
};

constexpr Block kBlocks[] = {
    {"beta", &Chain::beta},         {"mu_beta", &Chain::mu_beta}, {"v_beta", &Chain::v_beta},
    {"xi", &Chain::xi},             {"varsigma", &Chain::varsigma}, {"tau2_tilde", &Chain::tau2_tilde},
    {"sigma_u", &Chain::sigma_u},   {"gamma", &Chain::gamma},     {"phi", &Chain::phi},
    {"sigma2_nu", &Chain::sigma2_nu}, {"x", &Chain::x},           {"logvol", &Chain::logvol},
};

void write_doubles(std::ofstream& out, const double* data, Index n) {
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * sizeof(double)));
}

}  // namespace

void write_chain(const Chain& chain, const std::filesystem::path& bin_path, const std::filesystem::path& manifest_path,
                 const nlohmann::json& extra) {
  std::ofstream out(bin_path, std::ios::binary);
  if (!out) throw DataError(DataError::Kind::MissingFile, "cannot write '" + bin_path.string() + "'");
  nlohmann::json blocks = nlohmann::json::array();
  std::uint64_t offset = 0;
  auto emit = [&](const std::string& name, const double* data, Index rows, Index cols) {
    blocks.push_back({{"name", name}, {"rows", rows}, {"cols", cols}, {"offset", offset}});
    write_doubles(out, data, rows * cols);
    offset += static_cast<std::uint64_t>(rows * cols) * sizeof(double);
  };
  emit("log_lik", chain.log_lik.data(), chain.log_lik.size(), 1);
  for (const auto& b : kBlocks) {
    const MatrixXd& m = chain.*(b.matrix);
    emit(b.name, m.data(), m.rows(), m.cols());
  }
  emit("acceptance_xi", chain.acceptance_xi.data(), chain.acceptance_xi.size(), 1);
  emit("acceptance_varsigma", chain.acceptance_varsigma.data(), chain.acceptance_varsigma.size(), 1);
  out.close();
  if (!out) throw DataError(DataError::Kind::MissingFile, "failed writing '" + bin_path.string() + "'");

  nlohmann::json manifest = extra.is_object() ? extra : nlohmann::json::object();
  manifest["format_version"] = kFormatVersion;
  manifest["binary"] = bin_path.filename().string();
  manifest["byte_order"] = "little";
  manifest["draws"] = chain.draws();
  manifest["seed"] = chain.seed;
  manifest["dims"] = {{"n_shocks", chain.n_shocks},
                      {"horizons", chain.horizons},
                      {"n_controls", chain.n_controls},
                      {"rows", chain.rows},
                      {"n_instruments", chain.n_instruments}};
  manifest["blocks"] = blocks;
  std::ofstream m(manifest_path);
  if (!m) throw DataError(DataError::Kind::MissingFile, "cannot write '" + manifest_path.string() + "'");
  m << std::setw(2) << manifest << '\n';
}

Chain read_chain(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw DataError(DataError::Kind::MissingFile, "cannot open chain manifest '" + manifest_path.string() + "'");
  nlohmann::json manifest;
  try {
    in >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(DataError::Kind::Schema, "chain manifest is not valid JSON: " + std::string(e.what()));
  }
  try {
    if (manifest.at("format_version").get<int>() != kFormatVersion)
      throw DataError(DataError::Kind::Schema, "unsupported chain format version");
    Chain chain;
    const auto& dims = manifest.at("dims");
    chain.n_shocks = dims.at("n_shocks").get<Index>();
    chain.horizons = dims.at("horizons").get<Index>();
    chain.n_controls = dims.at("n_controls").get<Index>();
    chain.rows = dims.at("rows").get<Index>();
    chain.n_instruments = dims.at("n_instruments").get<Index>();
    chain.seed = manifest.at("seed").get<std::uint64_t>();

    const auto bin_path = manifest_path.parent_path() / manifest.at("binary").get<std::string>();
    std::ifstream bin(bin_path, std::ios::binary);
    if (!bin) throw DataError(DataError::Kind::MissingFile, "cannot open chain data '" + bin_path.string() + "'");
    for (const auto& b : manifest.at("blocks")) {
      const auto name = b.at("name").get<std::string>();
      const Index rows = b.at("rows").get<Index>();
      const Index cols = b.at("cols").get<Index>();
      MatrixXd m(rows, cols);
      bin.seekg(static_cast<std::streamoff>(b.at("offset").get<std::uint64_t>()));
      bin.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(rows * cols * sizeof(double)));
      if (!bin) throw DataError(DataError::Kind::Schema, "chain data truncated in block '" + name + "'");
      if (name == "log_lik")
        chain.log_lik = m.col(0);
      else if (name == "acceptance_xi")
        chain.acceptance_xi = m.reshaped();
      else if (name == "acceptance_varsigma")
        chain.acceptance_varsigma = m.reshaped();
      else
        for (const auto& known : kBlocks)
          if (name == known.name) chain.*(known.matrix) = std::move(m);
    }
    return chain;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(DataError::Kind::Schema, "chain manifest schema error: " + std::string(e.what()));
  }
}

void write_beta_csv(const Chain& chain, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError(DataError::Kind::MissingFile, "cannot write '" + path.string() + "'");
  out << "draw,log_lik";
  for (Index i = 0; i < chain.n_shocks; ++i)
    for (Index h = 0; h < chain.horizons; ++h) out << ",beta_" << i << '_' << h;
  out << '\n' << std::setprecision(17);
  for (Index s = 0; s < chain.draws(); ++s) {
    out << s << ',' << chain.log_lik[s];
    for (Index j = 0; j < chain.beta.cols(); ++j) out << ',' << chain.beta(s, j);
    out << '\n';
  }
}

}  // namespace sulp
