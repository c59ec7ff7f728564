#include "tgic/config.h"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "tgic/common.h"

namespace tgic {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("bad boolean for " + key + ": " + v);
}

double parse_double(const std::string& v, const std::string& key) {
  try {
    size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("bad number for " + key + ": " + v);
  }
}

int parse_int(const std::string& v, const std::string& key) {
  const double d = parse_double(v, key);
  const int i = static_cast<int>(d);
  if (static_cast<double>(i) != d) throw ConfigError("expected integer for " + key + ": " + v);
  return i;
}

}  // namespace

TrainConfig parse_train_config(const std::string& text) {
  TrainConfig c;
  std::map<std::string, std::function<void(const std::string&)>> setters;
  auto d = [&](const std::string& k, double* p) {
    setters[k] = [k, p](const std::string& v) { *p = parse_double(v, k); };
  };
  auto i = [&](const std::string& k, int* p) {
    setters[k] = [k, p](const std::string& v) { *p = parse_int(v, k); };
  };
  auto b = [&](const std::string& k, bool* p) {
    setters[k] = [k, p](const std::string& v) { *p = parse_bool(v, k); };
  };
  auto s = [&](const std::string& k, std::string* p) {
    setters[k] = [p](const std::string& v) { *p = v; };
  };

  d("learning_rate", &c.learning_rate);
  i("batch_size", &c.batch_size);
  i("epochs", &c.epochs);
  i("max_steps", &c.max_steps);
  setters["seed"] = [&c](const std::string& v) { c.seed = std::stoull(v); };
  i("checkpoint_interval", &c.checkpoint_interval);
  i("image_size", &c.image_size);
  i("pretrain_steps", &c.pretrain_steps);
  d("pretrain_lr", &c.pretrain_lr);
  b("enable_lp", &c.enable_lp);
  b("enable_lm", &c.enable_lm);
  b("enable_lii", &c.enable_lii);
  s("data_root", &c.data_root);
  s("train_manifest", &c.train_manifest);
  s("holdout_manifest", &c.holdout_manifest);
  s("out_dir", &c.out_dir);
  s("resume", &c.resume);

  d("k1", &c.weights.k1);
  d("k2", &c.weights.k2);
  d("k3", &c.weights.k3);
  d("k4", &c.weights.k4);
  d("beta", &c.weights.beta);
  d("lambda_a", &c.weights.lambda_a);
  d("lambda_b", &c.weights.lambda_b);
  d("r_t", &c.weights.r_t);

  i("c1", &c.arch.c1);
  i("c2", &c.arch.c2);
  i("c3", &c.arch.c3);
  i("c_y", &c.arch.c_y);
  i("c_z", &c.arch.c_z);
  i("res_per_module", &c.arch.res_per_module);
  i("d_text", &c.arch.d_text);
  i("embed_dim", &c.arch.embed_dim);
  i("max_words", &c.arch.max_words);
  i("min_freq", &c.arch.min_freq);
  b("use_tgfr", &c.arch.use_tgfr);
  b("use_tgir", &c.arch.use_tgir);
  b("use_tgat", &c.arch.use_tgat);
  b("use_irc", &c.arch.use_irc);

  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    TGIC_CHECK_CONFIG(eq != std::string::npos,
                      "config line " + std::to_string(lineno) + " is not key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    auto it = setters.find(key);
    TGIC_CHECK_CONFIG(it != setters.end(), "unknown config key: " + key);
    it->second(val);
  }
  validate(c);
  return c;
}

TrainConfig load_train_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  TGIC_CHECK_CONFIG(in.good(), "cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_train_config(ss.str());
}

void validate(const TrainConfig& c) {
  TGIC_CHECK_CONFIG(c.batch_size >= 1, "batch_size must be >= 1");
  TGIC_CHECK_CONFIG(c.learning_rate > 0, "learning_rate must be > 0");
  TGIC_CHECK_CONFIG(c.epochs >= 0 && c.max_steps >= 0, "epochs/max_steps must be >= 0");
  TGIC_CHECK_CONFIG(c.image_size >= 16 && c.image_size % 16 == 0,
                    "image_size must be a positive multiple of 16");
  TGIC_CHECK_CONFIG(c.weights.k1 >= 0 && c.weights.k2 >= 0 && c.weights.k3 >= 0 &&
                        c.weights.k4 >= 0 && c.weights.beta >= 0,
                    "loss weights must be non-negative");
  TGIC_CHECK_CONFIG(c.weights.lambda_b > 0 && c.weights.r_t > 0,
                    "lambda_b and r_t must be positive");
  TGIC_CHECK_CONFIG(c.weights.lambda_a == 0.0 || c.weights.lambda_a > c.weights.lambda_b,
                    "lambda_a must exceed lambda_b");
  const auto& a = c.arch;
  TGIC_CHECK_CONFIG(a.c1 > 0 && a.c2 > 0 && a.c3 > 0 && a.c_y > 0 && a.c_z > 0,
                    "channel widths must be positive");
  TGIC_CHECK_CONFIG(a.res_per_module >= 0, "res_per_module must be >= 0");
  const int root = static_cast<int>(std::lround(std::sqrt(static_cast<double>(a.d_text))));
  TGIC_CHECK_CONFIG(a.d_text > 0 && root * root == a.d_text,
                    "d_text must be a perfect square (discriminator reshapes it to a map)");
  TGIC_CHECK_CONFIG(a.embed_dim > 0 && a.max_words >= 1 && a.min_freq >= 1,
                    "embed_dim/max_words/min_freq out of range");
}

std::string serialize_train_config(const TrainConfig& c) {
  std::ostringstream o;
  o.precision(17);
  o << "learning_rate = " << c.learning_rate << "\n";
  o << "batch_size = " << c.batch_size << "\n";
  o << "epochs = " << c.epochs << "\n";
  o << "max_steps = " << c.max_steps << "\n";
  o << "seed = " << c.seed << "\n";
  o << "checkpoint_interval = " << c.checkpoint_interval << "\n";
  o << "image_size = " << c.image_size << "\n";
  o << "pretrain_steps = " << c.pretrain_steps << "\n";
  o << "pretrain_lr = " << c.pretrain_lr << "\n";
  o << "enable_lp = " << (c.enable_lp ? "true" : "false") << "\n";
  o << "enable_lm = " << (c.enable_lm ? "true" : "false") << "\n";
  o << "enable_lii = " << (c.enable_lii ? "true" : "false") << "\n";
  o << "data_root = " << c.data_root << "\n";
  o << "train_manifest = " << c.train_manifest << "\n";
  o << "holdout_manifest = " << c.holdout_manifest << "\n";
  o << "out_dir = " << c.out_dir << "\n";
  o << "resume = " << c.resume << "\n";
  o << "k1 = " << c.weights.k1 << "\n";
  o << "k2 = " << c.weights.k2 << "\n";
  o << "k3 = " << c.weights.k3 << "\n";
  o << "k4 = " << c.weights.k4 << "\n";
  o << "beta = " << c.weights.beta << "\n";
  o << "lambda_a = " << c.weights.lambda_a << "\n";
  o << "lambda_b = " << c.weights.lambda_b << "\n";
  o << "r_t = " << c.weights.r_t << "\n";
  o << "c1 = " << c.arch.c1 << "\n";
  o << "c2 = " << c.arch.c2 << "\n";
  o << "c3 = " << c.arch.c3 << "\n";
  o << "c_y = " << c.arch.c_y << "\n";
  o << "c_z = " << c.arch.c_z << "\n";
  o << "res_per_module = " << c.arch.res_per_module << "\n";
  o << "d_text = " << c.arch.d_text << "\n";
  o << "embed_dim = " << c.arch.embed_dim << "\n";
  o << "max_words = " << c.arch.max_words << "\n";
  o << "min_freq = " << c.arch.min_freq << "\n";
  o << "use_tgfr = " << (c.arch.use_tgfr ? "true" : "false") << "\n";
  o << "use_tgir = " << (c.arch.use_tgir ? "true" : "false") << "\n";
  o << "use_tgat = " << (c.arch.use_tgat ? "true" : "false") << "\n";
  o << "use_irc = " << (c.arch.use_irc ? "true" : "false") << "\n";
  return o.str();
}

}  // namespace tgic
