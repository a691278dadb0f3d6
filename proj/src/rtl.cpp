#include "kanele/rtl.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "kanele/error.hpp"

namespace kanele {

AdderPlan plan_adder_tree(int fan_in, int n_add) {
  if (fan_in < 1) throw Error(ErrorCode::invalid_argument, "adder tree needs at least one operand");
  if (n_add < 2) throw Error(ErrorCode::invalid_argument, "adder fan-in must be >= 2");
  AdderPlan plan;
  plan.fan_in = fan_in;
  plan.n_add = n_add;
  int operands = fan_in;
  while (operands > 1) {
    const int groups = (operands + n_add - 1) / n_add;
    const int base = operands / groups;
    const int extra = operands % groups;
    std::vector<int> sizes(static_cast<std::size_t>(groups), base);
    for (int g = 0; g < extra; ++g) ++sizes[static_cast<std::size_t>(g)];
    plan.stages.push_back(std::move(sizes));
    operands = groups;
  }
  plan.depth = static_cast<int>(plan.stages.size());
  return plan;
}

namespace {

int resolve_fanin(const LutLayer& layer, int n_add) { return n_add > 0 ? n_add : layer.adder_fanin; }

std::vector<std::size_t> neuron_edges(const LutLayer& layer, int q) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < layer.edges.size(); ++k) {
    if (layer.edges[k].out == q) out.push_back(k);
  }
  return out;
}

}  // namespace

int neuron_depth(const LutLayer& layer, int q, int n_add) {
  const int n = layer.fan_in(q);
  return n == 0 ? 0 : plan_adder_tree(n, resolve_fanin(layer, n_add)).depth;
}

int layer_depth(const LutLayer& layer, int n_add) {
  int depth = 0;
  for (int q = 0; q < layer.d_out; ++q) depth = std::max(depth, neuron_depth(layer, q, n_add));
  return depth;
}

int latency_cycles(const LutGraph& graph, int n_add) {
  int cycles = 1;
  for (const auto& layer : graph.layers) cycles += 1 + layer_depth(layer, n_add);
  return cycles;
}

void RtlOptions::validate() const {
  if (n_add != 0 && n_add < 2) throw Error(ErrorCode::invalid_argument, "n_add must be >= 2");
  if (!(target_clock_mhz > 0.0) || !std::isfinite(target_clock_mhz)) {
    throw Error(ErrorCode::invalid_argument, "target clock must be a positive frequency");
  }
  const std::string& p = entity_prefix;
  bool ok = !p.empty() && std::isalpha(static_cast<unsigned char>(p.front())) && p.back() != '_' &&
            p.find("__") == std::string::npos;
  for (char c : p) ok = ok && (std::isalnum(static_cast<unsigned char>(c)) || c == '_');
  if (!ok) {
    throw Error(ErrorCode::invalid_argument,
                "entity prefix '" + p + "' is not a valid VHDL identifier");
  }
}

const std::string* RtlBundle::find(const std::filesystem::path& rel) const noexcept {
  for (const auto& [path, text] : files) {
    if (path == rel) return &text;
  }
  return nullptr;
}

namespace {

constexpr const char* kLibraries =
    "library ieee;\n"
    "use ieee.std_logic_1164.all;\n"
    "use ieee.numeric_std.all;\n";

// Two's-complement bit-string literal of the given width.
std::string bits_literal(std::int64_t v, int width) {
  std::string s(static_cast<std::size_t>(width), '0');
  const auto u = static_cast<std::uint64_t>(v);
  for (int b = 0; b < width; ++b) {
    const int bit = std::min(b, 63);
    if ((u >> bit) & 1u) s[static_cast<std::size_t>(width - 1 - b)] = '1';
  }
  return "\"" + s + "\"";
}

std::string slice(int index, int width) {
  return "(" + std::to_string((index + 1) * width - 1) + " downto " + std::to_string(index * width) +
         ")";
}

int hex_digits(int bits) { return std::max(1, (bits + 3) / 4); }

std::string header(const LutGraph& graph, const std::string& what) {
  std::string h = "-- " + what + "\n-- Generated by kanele; do not edit.\n";
  if (graph.meta.contains("source_checkpoint_sha256") &&
      graph.meta["source_checkpoint_sha256"].is_string()) {
    h += "-- checkpoint sha256: " + graph.meta["source_checkpoint_sha256"].get<std::string>() + "\n";
  }
  return h + "\n";
}

std::string layer_pkg_name(const std::string& p, std::size_t l) {
  return p + "_layer" + std::to_string(l) + "_pkg";
}

std::string render_config_pkg(const LutGraph& graph, const RtlOptions& opt) {
  const std::string& p = opt.entity_prefix;
  const int in_width = input_width(graph);
  const LutLayer& last = graph.layers.back();
  const int out_width = last.d_out * last.out_bits;
  const auto period_ps = static_cast<long long>(std::llround(1e6 / opt.target_clock_mhz));
  char clock[64];
  std::snprintf(clock, sizeof clock, "%.3f", opt.target_clock_mhz);

  std::ostringstream o;
  o << header(graph, "Global constants and the shared requantization function.") << kLibraries
    << "\npackage " << p << "_config_pkg is\n"
    << "  constant IN_FEATURES    : natural := " << graph.dims.front() << ";\n"
    << "  constant IN_BITS        : natural := " << graph.input.base.bits() << ";\n"
    << "  constant IN_WIDTH       : natural := " << in_width << ";\n"
    << "  constant OUT_FEATURES   : natural := " << last.d_out << ";\n"
    << "  constant OUT_BITS       : natural := " << last.out_bits << ";\n"
    << "  constant OUT_WIDTH      : natural := " << out_width << ";\n"
    << "  constant IN_HEX_DIGITS  : natural := " << hex_digits(in_width) << ";\n"
    << "  constant OUT_HEX_DIGITS : natural := " << hex_digits(out_width) << ";\n"
    << "  constant NUM_LAYERS     : natural := " << graph.layers.size() << ";\n"
    << "  constant LATENCY        : natural := " << latency_cycles(graph, opt.n_add) << ";\n"
    << "  -- target clock " << clock << " MHz\n"
    << "  constant CLK_PERIOD     : time := " << period_ps << " ps;\n\n";
  for (std::size_t l = 0; l < graph.layers.size(); ++l) {
    const LutLayer& layer = graph.layers[l];
    o << "  -- layer " << l << ": " << layer.d_in << " x " << layer.in_bits << " bits -> "
      << layer.d_out << " x " << layer.out_bits << " bits, n_add "
      << resolve_fanin(layer, opt.n_add) << ", accumulator widths";
    for (int q = 0; q < layer.d_out; ++q) o << ' ' << layer.accumulator_width(q);
    o << "\n  constant L" << l << "_DEPTH : natural := " << layer_depth(layer, opt.n_add) << ";\n";
  }
  o << "\n  -- clamp(round_shift(acc, f), 0, 2**w - 1), rounding half away from zero.\n"
    << "  function requant(acc : signed; f : natural; w : natural) return std_logic_vector;\n"
    << "end package;\n\n"
    << "package body " << p << "_config_pkg is\n"
    << "  function requant(acc : signed; f : natural; w : natural) return std_logic_vector is\n"
    << "    constant n : natural := acc'length + w + f + 2;\n"
    << "    variable v    : signed(n - 1 downto 0);\n"
    << "    variable half : signed(n - 1 downto 0) := (others => '0');\n"
    << "    variable q    : signed(n - 1 downto 0);\n"
    << "    variable top  : signed(n - 1 downto 0) := (others => '0');\n"
    << "  begin\n"
    << "    v := resize(acc, n);\n"
    << "    if f = 0 then\n"
    << "      q := v;\n"
    << "    else\n"
    << "      half(f - 1) := '1';\n"
    << "      if v(n - 1) = '0' then\n"
    << "        q := shift_right(v + half, f);\n"
    << "      else\n"
    << "        q := -shift_right((-v) + half, f);\n"
    << "      end if;\n"
    << "    end if;\n"
    << "    top(w - 1 downto 0) := (others => '1');\n"
    << "    if q(n - 1) = '1' then\n"
    << "      return std_logic_vector(to_unsigned(0, w));\n"
    << "    elsif q > top then\n"
    << "      return std_logic_vector(top(w - 1 downto 0));\n"
    << "    else\n"
    << "      return std_logic_vector(q(w - 1 downto 0));\n"
    << "    end if;\n"
    << "  end function;\n"
    << "end package body;\n";
  return o.str();
}

std::string render_layer_pkg(const LutGraph& graph, const LutLayer& layer, std::size_t l,
                             const RtlOptions& opt) {
  const std::string ln = "l" + std::to_string(l);
  const std::string LN = "L" + std::to_string(l);
  std::ostringstream o;
  o << header(graph, "Layer " + std::to_string(l) + " truth tables and offsets.") << kLibraries
    << "\npackage " << layer_pkg_name(opt.entity_prefix, l) << " is\n"
    << "  constant " << LN << "_D_IN       : natural := " << layer.d_in << ";\n"
    << "  constant " << LN << "_D_OUT      : natural := " << layer.d_out << ";\n"
    << "  constant " << LN << "_IN_BITS    : natural := " << layer.in_bits << ";\n"
    << "  constant " << LN << "_OUT_BITS   : natural := " << layer.out_bits << ";\n"
    << "  constant " << LN << "_GUARD_BITS : natural := " << layer.guard_bits << ";\n";
  for (std::size_t k = 0; k < layer.edges.size(); ++k) {
    const LutEdge& e = layer.edges[k];
    const std::string ek = ln + "_e" + std::to_string(k);
    o << "\n  -- edge " << k << ": input " << e.in << " -> neuron " << e.out << ", "
      << e.entry_bits << "-bit entries\n"
      << "  subtype " << ek << "_entry_t is signed(" << e.entry_bits - 1 << " downto 0);\n"
      << "  type " << ek << "_rom_t is array (0 to " << e.table.size() - 1 << ") of " << ek
      << "_entry_t;\n"
      << "  constant " << LN << "_E" << k << "_ROM : " << ek << "_rom_t := (";
    for (std::size_t c = 0; c < e.table.size(); ++c) {
      if (c % 8 == 0) o << "\n   ";
      o << ' ' << bits_literal(e.table[c], e.entry_bits) << (c + 1 < e.table.size() ? "," : "");
    }
    o << "\n  );\n";
  }
  o << '\n';
  for (int q = 0; q < layer.d_out; ++q) {
    o << "  constant " << LN << "_OFFSET_N" << q << " : signed(" << layer.accumulator_width(q) - 1
      << " downto 0) := " << bits_literal(layer.offsets[static_cast<std::size_t>(q)],
                                          layer.accumulator_width(q))
      << ";\n";
  }
  o << "end package;\n";
  return o.str();
}

std::string join_sum(const std::vector<std::string>& terms) {
  std::string s;
  for (std::size_t i = 0; i < terms.size(); ++i) s += (i ? " + " : "") + terms[i];
  return s;
}

std::string render_layer(const LutGraph& graph, const LutLayer& layer, std::size_t l,
                         const RtlOptions& opt) {
  const std::string& p = opt.entity_prefix;
  const std::string ln = "l" + std::to_string(l);
  const std::string LN = "L" + std::to_string(l);
  const std::string uses = std::string(kLibraries) + "use work." + p + "_config_pkg.all;\nuse work." +
                           layer_pkg_name(p, l) + ".all;\n";
  const int depth = layer_depth(layer, opt.n_add);
  const int n_add = resolve_fanin(layer, opt.n_add);
  std::ostringstream o;
  o << header(graph, "Layer " + std::to_string(l) + ": per-edge LUT entities and the layer pipeline.");

  for (std::size_t k = 0; k < layer.edges.size(); ++k) {
    const LutEdge& e = layer.edges[k];
    const std::string name = p + "_" + ln + "_lut" + std::to_string(k);
    o << uses << "\nentity " << name << " is\n"
      << "  port (\n"
      << "    addr : in  std_logic_vector(" << layer.in_bits - 1 << " downto 0);\n"
      << "    data : out signed(" << e.entry_bits - 1 << " downto 0)\n"
      << "  );\n"
      << "end entity;\n\n"
      << "architecture rtl of " << name << " is\n"
      << "begin\n"
      << "  data <= " << LN << "_E" << k << "_ROM(to_integer(unsigned(addr)));\n"
      << "end architecture;\n\n";
  }

  // Signal declarations and register assignments are collected per stage.
  std::ostringstream decls;
  std::ostringstream body;
  std::vector<std::ostringstream> stage(static_cast<std::size_t>(depth + 1));
  const std::string in_slice_width = std::to_string(layer.in_bits);

  for (std::size_t k = 0; k < layer.edges.size(); ++k) {
    decls << "  signal lut" << k << " : signed(" << layer.edges[k].entry_bits - 1 << " downto 0);\n";
    body << "  u_lut" << k << " : entity work." << p << "_" << ln << "_lut" << k
         << " port map (addr => x" << slice(layer.edges[k].in, layer.in_bits) << ", data => lut"
         << k << ");\n";
  }
  for (int q = 0; q < layer.d_out; ++q) {
    const int acc = layer.accumulator_width(q);
    const std::string acc_t = "signed(" + std::to_string(acc - 1) + " downto 0)";
    const std::string offset = LN + "_OFFSET_N" + std::to_string(q);
    const std::string target = "y" + slice(q, layer.out_bits);
    const std::string requant_tail =
        ", " + LN + "_GUARD_BITS, " + LN + "_OUT_BITS);\n";
    const auto edges = neuron_edges(layer, q);
    std::vector<std::string> operands;
    for (std::size_t k : edges) operands.push_back("resize(lut" + std::to_string(k) + ", " + std::to_string(acc) + ")");

    if (depth == 0) {
      operands.push_back(offset);
      stage[0] << "      " << target << " <= requant(" << join_sum(operands) << requant_tail;
      continue;
    }
    // Stage 0 registers the LUT outputs at accumulator width.
    std::vector<std::string> cur;
    for (std::size_t i = 0; i < operands.size(); ++i) {
      const std::string r = "s0_n" + std::to_string(q) + "_" + std::to_string(i);
      decls << "  signal " << r << " : " << acc_t << ";\n";
      stage[0] << "      " << r << " <= " << operands[i] << ";\n";
      cur.push_back(r);
    }
    const AdderPlan plan =
        plan_adder_tree(std::max<int>(1, static_cast<int>(edges.size())), n_add);
    for (int s = 1; s <= depth; ++s) {
      std::vector<std::vector<std::string>> groups;
      if (!cur.empty() && s <= plan.depth) {
        std::size_t next = 0;
        for (int size : plan.stages[static_cast<std::size_t>(s - 1)]) {
          groups.emplace_back(cur.begin() + static_cast<std::ptrdiff_t>(next),
                              cur.begin() + static_cast<std::ptrdiff_t>(next + static_cast<std::size_t>(size)));
          next += static_cast<std::size_t>(size);
        }
      } else if (!cur.empty()) {
        groups.push_back(cur);  // already reduced: delay register
      }
      if (s == depth) {
        std::vector<std::string> terms = groups.empty() ? std::vector<std::string>{} : groups.front();
        terms.push_back(offset);
        stage[static_cast<std::size_t>(s)] << "      " << target << " <= requant(" << join_sum(terms)
                                           << requant_tail;
        break;
      }
      std::vector<std::string> next_cur;
      for (std::size_t g = 0; g < groups.size(); ++g) {
        const std::string r = "s" + std::to_string(s) + "_n" + std::to_string(q) + "_" + std::to_string(g);
        decls << "  signal " << r << " : " << acc_t << ";\n";
        stage[static_cast<std::size_t>(s)] << "      " << r << " <= " << join_sum(groups[g]) << ";\n";
        next_cur.push_back(r);
      }
      cur = std::move(next_cur);
    }
  }

  const std::string name = p + "_layer" + std::to_string(l);
  o << uses << "\nentity " << name << " is\n"
    << "  port (\n"
    << "    clk : in  std_logic;\n"
    << "    x   : in  std_logic_vector(" << layer.d_in * layer.in_bits - 1 << " downto 0);\n"
    << "    y   : out std_logic_vector(" << layer.d_out * layer.out_bits - 1 << " downto 0)\n"
    << "  );\n"
    << "end entity;\n\n"
    << "-- Latency " << depth + 1 << " cycles: LUT register, then " << depth
    << " adder stage(s); the last stage adds the offset and requantizes.\n"
    << "architecture rtl of " << name << " is\n"
    << decls.str() << "begin\n"
    << body.str() << "\n"
    << "  pipeline : process (clk)\n"
    << "  begin\n"
    << "    if rising_edge(clk) then\n";
  for (int s = 0; s <= depth; ++s) {
    o << "      -- stage " << s << '\n' << stage[static_cast<std::size_t>(s)].str();
  }
  o << "    end if;\n"
    << "  end process;\n"
    << "end architecture;\n";
  return o.str();
}

std::string render_top(const LutGraph& graph, const RtlOptions& opt) {
  const std::string& p = opt.entity_prefix;
  std::ostringstream o;
  o << header(graph, "Top-level core: input register, layer pipelines, valid shift register.")
    << kLibraries << "use work." << p << "_config_pkg.all;\n\n"
    << "entity " << p << "_top is\n"
    << "  port (\n"
    << "    clk       : in  std_logic;\n"
    << "    rst       : in  std_logic;\n"
    << "    in_valid  : in  std_logic;\n"
    << "    in_codes  : in  std_logic_vector(IN_WIDTH - 1 downto 0);\n"
    << "    out_valid : out std_logic;\n"
    << "    out_codes : out std_logic_vector(OUT_WIDTH - 1 downto 0)\n"
    << "  );\n"
    << "end entity;\n\n"
    << "architecture rtl of " << p << "_top is\n"
    << "  signal x_reg    : std_logic_vector(IN_WIDTH - 1 downto 0);\n"
    << "  signal valid_sr : std_logic_vector(LATENCY - 1 downto 0) := (others => '0');\n";
  for (std::size_t l = 0; l < graph.layers.size(); ++l) {
    const LutLayer& layer = graph.layers[l];
    o << "  signal act" << l + 1 << "     : std_logic_vector("
      << layer.d_out * layer.out_bits - 1 << " downto 0);\n";
  }
  o << "begin\n"
    << "  input_reg : process (clk)\n"
    << "  begin\n"
    << "    if rising_edge(clk) then\n"
    << "      x_reg <= in_codes;\n"
    << "      if rst = '1' then\n"
    << "        valid_sr <= (others => '0');\n"
    << "      else\n"
    << "        valid_sr <= valid_sr(LATENCY - 2 downto 0) & in_valid;\n"
    << "      end if;\n"
    << "    end if;\n"
    << "  end process;\n\n";
  for (std::size_t l = 0; l < graph.layers.size(); ++l) {
    o << "  u_layer" << l << " : entity work." << p << "_layer" << l << " port map (clk => clk, x => "
      << (l == 0 ? std::string("x_reg") : "act" + std::to_string(l)) << ", y => act" << l + 1
      << ");\n";
  }
  o << "\n  out_codes <= act" << graph.layers.size() << ";\n"
    << "  out_valid <= valid_sr(LATENCY - 1);\n"
    << "end architecture;\n";
  return o.str();
}

std::string render_tb(const LutGraph& graph, const RtlOptions& opt) {
  const std::string& p = opt.entity_prefix;
  std::ostringstream o;
  o << header(graph, "Self-checking testbench: streams tb/stimulus.vec, compares with tb/expected.vec.")
    << kLibraries << "use std.textio.all;\nuse work." << p << "_config_pkg.all;\n\n"
    << "entity " << p << "_tb is\n"
    << "  generic (\n"
    << "    STIMULUS_FILE : string := \"tb/stimulus.vec\";\n"
    << "    EXPECTED_FILE : string := \"tb/expected.vec\"\n"
    << "  );\n"
    << "end entity;\n\n"
    << "architecture sim of " << p << "_tb is\n"
    << "  signal clk       : std_logic := '0';\n"
    << "  signal rst       : std_logic := '1';\n"
    << "  signal done      : boolean := false;\n"
    << "  signal in_valid  : std_logic := '0';\n"
    << "  signal in_codes  : std_logic_vector(IN_WIDTH - 1 downto 0) := (others => '0');\n"
    << "  signal out_valid : std_logic;\n"
    << "  signal out_codes : std_logic_vector(OUT_WIDTH - 1 downto 0);\n\n"
    << "  function hex_to_slv(s : string; width : natural) return std_logic_vector is\n"
    << "    variable r   : std_logic_vector(4 * s'length - 1 downto 0) := (others => '0');\n"
    << "    variable c   : character;\n"
    << "    variable nib : natural;\n"
    << "  begin\n"
    << "    for i in 0 to s'length - 1 loop\n"
    << "      c := s(s'right - i);\n"
    << "      case c is\n"
    << "        when '0' to '9' => nib := character'pos(c) - character'pos('0');\n"
    << "        when 'a' to 'f' => nib := character'pos(c) - character'pos('a') + 10;\n"
    << "        when 'A' to 'F' => nib := character'pos(c) - character'pos('A') + 10;\n"
    << "        when others =>\n"
    << "          report \"invalid hex digit in vector file\" severity failure;\n"
    << "          nib := 0;\n"
    << "      end case;\n"
    << "      r(4 * i + 3 downto 4 * i) := std_logic_vector(to_unsigned(nib, 4));\n"
    << "    end loop;\n"
    << "    return r(width - 1 downto 0);\n"
    << "  end function;\n\n"
    << "  function slv_to_hex(v : std_logic_vector) return string is\n"
    << "    constant digits : natural := (v'length + 3) / 4;\n"
    << "    constant hex    : string(1 to 16) := \"0123456789abcdef\";\n"
    << "    variable padded : unsigned(4 * digits - 1 downto 0) := (others => '0');\n"
    << "    variable r      : string(1 to digits);\n"
    << "  begin\n"
    << "    padded(v'length - 1 downto 0) := unsigned(v);\n"
    << "    for i in 0 to digits - 1 loop\n"
    << "      r(digits - i) := hex(to_integer(padded(4 * i + 3 downto 4 * i)) + 1);\n"
    << "    end loop;\n"
    << "    return r;\n"
    << "  end function;\n"
    << "begin\n"
    << "  clk <= not clk after CLK_PERIOD / 2 when not done else clk;\n\n"
    << "  dut : entity work." << p << "_top\n"
    << "    port map (clk => clk, rst => rst, in_valid => in_valid, in_codes => in_codes,\n"
    << "              out_valid => out_valid, out_codes => out_codes);\n\n"
    << "  stimulus : process\n"
    << "    file f     : text open read_mode is STIMULUS_FILE;\n"
    << "    variable l : line;\n"
    << "    variable s : string(1 to IN_HEX_DIGITS);\n"
    << "  begin\n"
    << "    wait until falling_edge(clk);\n"
    << "    wait until falling_edge(clk);\n"
    << "    rst <= '0';\n"
    << "    while not endfile(f) loop\n"
    << "      readline(f, l);\n"
    << "      read(l, s);\n"
    << "      in_codes <= hex_to_slv(s, IN_WIDTH);\n"
    << "      in_valid <= '1';\n"
    << "      wait until falling_edge(clk);\n"
    << "    end loop;\n"
    << "    in_valid <= '0';\n"
    << "    wait;\n"
    << "  end process;\n\n"
    << "  check : process\n"
    << "    file f            : text open read_mode is EXPECTED_FILE;\n"
    << "    variable l        : line;\n"
    << "    variable s        : string(1 to OUT_HEX_DIGITS);\n"
    << "    variable expected : std_logic_vector(OUT_WIDTH - 1 downto 0);\n"
    << "    variable index    : natural := 0;\n"
    << "    variable passes   : natural := 0;\n"
    << "    variable fails    : natural := 0;\n"
    << "    variable waited   : natural;\n"
    << "  begin\n"
    << "    while not endfile(f) loop\n"
    << "      readline(f, l);\n"
    << "      read(l, s);\n"
    << "      expected := hex_to_slv(s, OUT_WIDTH);\n"
    << "      waited := 0;\n"
    << "      loop\n"
    << "        wait until falling_edge(clk);\n"
    << "        exit when out_valid = '1';\n"
    << "        waited := waited + 1;\n"
    << "        assert waited <= LATENCY + 4\n"
    << "          report \"timeout waiting for output \" & integer'image(index) severity failure;\n"
    << "      end loop;\n"
    << "      if out_codes = expected then\n"
    << "        passes := passes + 1;\n"
    << "      else\n"
    << "        fails := fails + 1;\n"
    << "        report \"mismatch at vector \" & integer'image(index) & \": expected \" & s &\n"
    << "               \", got \" & slv_to_hex(out_codes) severity error;\n"
    << "      end if;\n"
    << "      index := index + 1;\n"
    << "    end loop;\n"
    << "    report \"KANELE_TB PASS=\" & integer'image(passes) & \" FAIL=\" & integer'image(fails)\n"
    << "      severity note;\n"
    << "    assert fails = 0 report \"testbench detected mismatches\" severity failure;\n"
    << "    done <= true;\n"
    << "    wait;\n"
    << "  end process;\n"
    << "end architecture;\n";
  return o.str();
}

std::string render_build_tcl(const LutGraph& graph, const RtlOptions& opt,
                             const std::vector<std::string>& sources) {
  const std::string& p = opt.entity_prefix;
  char period[32];
  std::snprintf(period, sizeof period, "%.3f", 1000.0 / opt.target_clock_mhz);
  std::ostringstream o;
  o << "# Out-of-context synthesis stub. Set PART before sourcing.\n"
    << "# Generated by kanele; do not edit.\n"
    << "if {![info exists PART]} { set PART \"xcvu9p-flga2104-2L-e\" }\n"
    << "set script_dir [file dirname [file normalize [info script]]]\n"
    << "set root [file dirname $script_dir]\n\n";
  for (const auto& s : sources) o << "read_vhdl [file join $root " << s << "]\n";
  o << "\nsynth_design -top " << p << "_top -part $PART -mode out_of_context\n"
    << "create_clock -name clk -period " << period << " [get_ports clk]\n"
    << "report_utilization -file [file join $root " << p << "_utilization.rpt]\n"
    << "report_timing_summary -file [file join $root " << p << "_timing.rpt]\n"
    << "# latency " << latency_cycles(graph, opt.n_add) << " cycles\n";
  return o.str();
}

}  // namespace

RtlBundle emit_testbench(const LutGraph& graph, std::span<const SimVector> vectors,
                         const RtlOptions& options) {
  options.validate();
  if (vectors.empty()) throw Error(ErrorCode::invalid_argument, "testbench needs at least one vector");
  const LutLayer& last = graph.layers.back();
  std::vector<std::vector<Code>> stimulus;
  std::vector<std::vector<Code>> expected;
  stimulus.reserve(vectors.size());
  expected.reserve(vectors.size());
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    const SimVector& v = vectors[i];
    try {
      check_input_codes(graph, v.inputs);
    } catch (const Error& e) {
      throw Error(ErrorCode::invalid_argument, "vector " + std::to_string(i) + ": " + e.what());
    }
    auto out = sim_forward(graph, v.inputs);
    if (!v.expected.empty() && v.expected != out) {
      throw Error(ErrorCode::invalid_argument,
                  "vector " + std::to_string(i) + ": expected codes disagree with the simulator");
    }
    stimulus.push_back(v.inputs);
    expected.push_back(std::move(out));
  }
  auto render = [](const std::vector<std::vector<Code>>& rows, int width) {
    std::string text;
    for (const auto& r : rows) text += format_vec_line(r, width) + "\n";
    return text;
  };
  RtlBundle bundle;
  bundle.files.emplace_back("tb/" + options.entity_prefix + "_tb.vhd", render_tb(graph, options));
  bundle.files.emplace_back("tb/stimulus.vec", render(stimulus, graph.input.base.bits()));
  bundle.files.emplace_back("tb/expected.vec", render(expected, last.out_bits));
  return bundle;
}

RtlBundle render_vhdl(const LutGraph& graph, const RtlOptions& options,
                      std::span<const SimVector> vectors) {
  options.validate();
  validate(graph);
  const std::string& p = options.entity_prefix;
  RtlBundle bundle;
  std::vector<std::string> sources;
  auto add = [&](const std::string& rel, std::string text) {
    sources.push_back(rel);
    bundle.files.emplace_back(rel, std::move(text));
  };
  add("rtl/" + p + "_config_pkg.vhd", render_config_pkg(graph, options));
  for (std::size_t l = 0; l < graph.layers.size(); ++l) {
    add("rtl/" + layer_pkg_name(p, l) + ".vhd", render_layer_pkg(graph, graph.layers[l], l, options));
  }
  for (std::size_t l = 0; l < graph.layers.size(); ++l) {
    add("rtl/" + p + "_layer" + std::to_string(l) + ".vhd",
        render_layer(graph, graph.layers[l], l, options));
  }
  add("rtl/" + p + "_top.vhd", render_top(graph, options));

  RtlBundle tb = emit_testbench(graph, vectors, options);
  for (auto& f : tb.files) bundle.files.push_back(std::move(f));

  std::string order;
  for (const auto& s : sources) order += s + "\n";
  order += "tb/" + p + "_tb.vhd\n";
  bundle.files.emplace_back("scripts/sources.f", std::move(order));
  bundle.files.emplace_back("scripts/build.tcl", render_build_tcl(graph, options, sources));
  return bundle;
}

RtlBundle render_vhdl(const LutGraph& graph, const RtlOptions& options) {
  validate(graph);
  const auto vectors = random_vectors(graph, options.test_vectors, options.vector_seed);
  return render_vhdl(graph, options, vectors);
}

void write_bundle(const RtlBundle& bundle, const std::filesystem::path& out_dir) {
  for (const auto& [rel, text] : bundle.files) {
    const auto path = out_dir / rel;
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw Error(ErrorCode::io, "cannot create '" + path.parent_path().string() + "': " + ec.message());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::io, "cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw Error(ErrorCode::io, "failed writing '" + path.string() + "'");
  }
}

RtlBundle emit_vhdl(const LutGraph& graph, const RtlOptions& options,
                    const std::filesystem::path& out_dir) {
  RtlBundle bundle = render_vhdl(graph, options);
  write_bundle(bundle, out_dir);
  return bundle;
}

}  // namespace kanele
