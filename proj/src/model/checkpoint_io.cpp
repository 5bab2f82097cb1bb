#include "style_erd/model/checkpoint_io.hpp"

#include "style_erd/nn/checkpoint.hpp"

#include <fstream>
#include <stdexcept>

namespace style_erd::model {

namespace {

constexpr const char* kModelFormat = "style_erd.model";
constexpr const char* kClassifierFormat = "style_erd.classifier";

nlohmann::json header_for(const char* format, const ModelConfig& config, nlohmann::json extra) {
  nlohmann::json h = std::move(extra);
  h["format"] = format;
  h["model"] = config.to_json();
  return h;
}

ModelConfig config_of(const nn::Checkpoint& ckpt, const char* format,
                      const std::filesystem::path& path) {
  if (ckpt.header.value("format", std::string()) != format) {
    throw std::runtime_error(path.string() + " is not a " + format + " checkpoint");
  }
  return ModelConfig::from_json(ckpt.header.at("model"));
}

}  // namespace

void write_model(std::ostream& out, const Generator& gen, const Discriminator& dis,
                 const nlohmann::json& extra) {
  nn::write_checkpoint(out, header_for(kModelFormat, gen.config(), extra),
                       {&gen.params(), &dis.params()}, {"gen.", "dis."});
}

void save_model(const std::filesystem::path& path, const Generator& gen, const Discriminator& dis,
                const nlohmann::json& extra) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  write_model(out, gen, dis, extra);
}

Generator load_generator(const std::filesystem::path& path) {
  const nn::Checkpoint ckpt = nn::load_checkpoint(path);
  Generator gen(config_of(ckpt, kModelFormat, path), 0);
  nn::restore_params(ckpt, gen.params(), "gen.");
  return gen;
}

Discriminator load_discriminator(const std::filesystem::path& path) {
  const nn::Checkpoint ckpt = nn::load_checkpoint(path);
  Discriminator dis(config_of(ckpt, kModelFormat, path), 0);
  nn::restore_params(ckpt, dis.params(), "dis.");
  return dis;
}

void save_classifier(const std::filesystem::path& path, const ContentClassifier& cls) {
  nn::save_checkpoint(path, header_for(kClassifierFormat, cls.config(), nlohmann::json::object()),
                      cls.params());
}

ContentClassifier load_classifier(const std::filesystem::path& path) {
  const nn::Checkpoint ckpt = nn::load_checkpoint(path);
  ContentClassifier cls(config_of(ckpt, kClassifierFormat, path), 0);
  nn::restore_params(ckpt, cls.params());
  cls.params().set_trainable(false);
  return cls;
}

}  // namespace style_erd::model
