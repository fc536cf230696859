#include "stylever/model_io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "stylever/error.hpp"

namespace stylever {
namespace {

constexpr int kFormatVersion = 1;

std::string fmt(double v) {
  char buf[40];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  if (ec != std::errc{}) throw Error("cannot format number");
  return {buf, end};
}

template <typename Derived>
void put_row(std::ostream& out, const char* tag, const Eigen::DenseBase<Derived>& v) {
  out << tag;
  for (Eigen::Index i = 0; i < v.size(); ++i) out << ' ' << fmt(static_cast<double>(v(i)));
  out << '\n';
}

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::string word() {
    std::string w;
    if (!(in_ >> w)) throw Error("model record truncated");
    return w;
  }
  void expect(const std::string& tag) {
    const auto w = word();
    if (w != tag) throw Error("model record: expected '" + tag + "', found '" + w + "'");
  }
  double real() {
    const auto w = word();
    double v = 0;
    auto [ptr, ec] = std::from_chars(w.data(), w.data() + w.size(), v);
    if (ec != std::errc{} || ptr != w.data() + w.size())
      throw Error("model record: bad number '" + w + "'");
    return v;
  }
  long integer() {
    const auto w = word();
    long v = 0;
    auto [ptr, ec] = std::from_chars(w.data(), w.data() + w.size(), v);
    if (ec != std::errc{} || ptr != w.data() + w.size())
      throw Error("model record: bad integer '" + w + "'");
    return v;
  }
  Eigen::VectorXd row(const std::string& tag, Eigen::Index n) {
    expect(tag);
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = real();
    return v;
  }

 private:
  std::istream& in_;
};

void write_gmm(std::ostream& out, const DiagGmm& g) {
  put_row(out, "weights", g.weights());
  for (Eigen::Index m = 0; m < g.num_components(); ++m) {
    put_row(out, "mean", g.means().col(m));
    put_row(out, "var", g.vars().col(m));
  }
}

DiagGmm read_gmm(Reader& r, Eigen::Index m_count, Eigen::Index dim) {
  Eigen::VectorXd w = r.row("weights", m_count);
  Eigen::MatrixXd means(dim, m_count), vars(dim, m_count);
  for (Eigen::Index m = 0; m < m_count; ++m) {
    means.col(m) = r.row("mean", dim);
    vars.col(m) = r.row("var", dim);
  }
  return DiagGmm(w, means, vars);
}

}  // namespace

void write_hmm(std::ostream& out, const HmmModel& model) {
  model.validate();
  const int n = model.n_states();
  out << "hmm " << n << ' ' << model.n_mix() << ' ' << model.dim() << '\n';
  put_row(out, "pi", model.pi);
  for (int i = 0; i < n; ++i) put_row(out, "trans", model.trans.row(i));
  for (int i = 0; i < n; ++i) put_row(out, "mask", model.mask.row(i).cast<int>());
  put_row(out, "final", model.final_states.cast<int>());
  put_row(out, "var_floor", model.var_floor);
  for (int j = 0; j < n; ++j) {
    out << "state " << j << '\n';
    write_gmm(out, model.states[static_cast<std::size_t>(j)]);
  }
}

HmmModel read_hmm(std::istream& in) {
  Reader r(in);
  r.expect("hmm");
  const long n = r.integer(), m = r.integer(), d = r.integer();
  if (n < 1 || m < 1 || d < 1) throw Error("model record: bad hmm dimensions");
  HmmModel model;
  model.pi = r.row("pi", n);
  model.trans.resize(n, n);
  for (long i = 0; i < n; ++i) model.trans.row(i) = r.row("trans", n);
  model.mask.resize(n, n);
  for (long i = 0; i < n; ++i) model.mask.row(i) = r.row("mask", n).array() != 0.0;
  model.final_states = r.row("final", n).array() != 0.0;
  model.var_floor = r.row("var_floor", d);
  for (long j = 0; j < n; ++j) {
    r.expect("state");
    if (r.integer() != j) throw Error("model record: states out of order");
    model.states.push_back(read_gmm(r, m, d));
  }
  model.validate();
  return model;
}

void write_sphmm(std::ostream& out, const SphmmModel& model) {
  model.validate();
  write_hmm(out, model.acoustic);
  const int s = model.num_supra_states();
  out << "sphmm " << s << '\n';
  out << "grouping";
  for (int g : model.grouping.sizes) out << ' ' << g;
  out << '\n';
  out << "alpha " << fmt(model.alpha) << '\n';
  for (int i = 0; i < s; ++i) put_row(out, "supra_trans", model.supra_trans.row(i));
  for (int g = 0; g < s; ++g) {
    const auto& st = model.supra_states[static_cast<std::size_t>(g)];
    out << "supra_state " << g << ' ' << st.num_components() << ' ' << st.dim() << '\n';
    write_gmm(out, st);
  }
}

SphmmModel read_sphmm(std::istream& in) {
  SphmmModel model;
  model.acoustic = read_hmm(in);
  Reader r(in);
  r.expect("sphmm");
  const long s = r.integer();
  if (s < 1) throw Error("model record: bad suprasegmental state count");
  r.expect("grouping");
  model.grouping.sizes.clear();
  for (long g = 0; g < s; ++g) model.grouping.sizes.push_back(static_cast<int>(r.integer()));
  r.expect("alpha");
  model.alpha = r.real();
  model.supra_trans.resize(s, s);
  for (long i = 0; i < s; ++i) model.supra_trans.row(i) = r.row("supra_trans", s);
  for (long g = 0; g < s; ++g) {
    r.expect("supra_state");
    if (r.integer() != g) throw Error("model record: supra states out of order");
    const long k = r.integer(), d = r.integer();
    model.supra_states.push_back(read_gmm(r, k, d));
  }
  model.validate();
  return model;
}

void save_model(const std::filesystem::path& path, const StoredModel& stored) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write model " + path.string());
  out << "stylever-model " << kFormatVersion << '\n';
  if (stored.claim) {
    out << "claim " << stored.claim->speaker_id << ' ' << stored.claim->sentence_id << ' '
        << style_name(stored.claim->style) << '\n';
  } else {
    out << "claim -\n";
  }
  out << "theta " << fmt(stored.theta) << '\n';
  write_sphmm(out, stored.model);
  out << "end\n";
}

StoredModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open model " + path.string());
  Reader r(in);
  r.expect("stylever-model");
  if (r.integer() != kFormatVersion) throw Error("unsupported model format version");
  StoredModel stored;
  r.expect("claim");
  const auto speaker = r.word();
  if (speaker != "-") {
    ClaimIdentity c;
    c.speaker_id = speaker;
    c.sentence_id = static_cast<int>(r.integer());
    auto style = parse_style(r.word());
    if (!style) throw Error("model record: bad claim style");
    c.style = *style;
    stored.claim = c;
  }
  r.expect("theta");
  stored.theta = r.real();
  stored.model = read_sphmm(in);
  r.expect("end");
  return stored;
}

}  // namespace stylever
