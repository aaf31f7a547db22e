#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <doctest.h>

namespace fs = std::filesystem;

namespace {

std::string bin() { return TRANSLAB_BIN; }

int run(const std::string& args) {
    std::string cmd = bin() + " " + args + " > /dev/null 2>&1";
    int rc = std::system(cmd.c_str());
    REQUIRE(rc != -1);
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -2;
}

int run_env(const std::string& env, const std::string& args) {
    std::string cmd = env + " " + bin() + " " + args + " > /dev/null 2>&1";
    int rc = std::system(cmd.c_str());
    REQUIRE(rc != -1);
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -2;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string first_line(const std::string& text) {
    return text.substr(0, text.find('\n'));
}

// Manifest text with the volatile timestamp line removed.
std::string stable_part(const std::string& manifest) {
    std::istringstream in(manifest);
    std::ostringstream out;
    std::string line;
    while (std::getline(in, line))
        if (line.rfind("timestamp", 0) != 0) out << line << '\n';
    return out.str();
}

fs::path fresh_dir(const std::string& name) {
    fs::path d = fs::path("cli_scratch") / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

}  // namespace

TEST_CASE("exit codes distinguish usage, domain, and success") {
    fs::create_directories("cli_scratch");
    CHECK(run("spaces --manifest cli_scratch/spaces_ok.txt") == 0);
    CHECK(run("--help") == 0);
    CHECK(run("") == 64);
    CHECK(run("frobnicate") == 64);
    CHECK(run("solve --bogus 3") == 64);
    CHECK(run("solve") == 64);  // missing required --s0
    fs::path d = fresh_dir("codes");
    std::string io = " --out " + (d / "t.csv").string() + " --manifest " + (d / "m.txt").string();
    CHECK(run("solve --kind nope --s0 1" + io) == 2);
    CHECK(run("solve --kind cp --n 2 --s0 -1" + io) == 2);
    CHECK(run("solve --kind cp --n 0 --s0 1" + io) == 2);
    CHECK(run("shoot --kind cp --n 2 --end sideways" + io) == 2);
}

TEST_CASE("solve writes the trace and classifies the start") {
    fs::path d = fresh_dir("solve");
    std::string out = (d / "trace.csv").string(), man = (d / "man.txt").string();
    REQUIRE(run("solve --kind cp --n 2 --s0 1.6 --v0 0 --dv0 0 --out " + out +
                " --manifest " + man) == 0);
    std::string csv = slurp(out);
    CHECK(first_line(csv) == "s,V,dV");
    CHECK(std::count(csv.begin(), csv.end(), '\n') > 50);
    std::string m = slurp(man);
    CHECK(m.find("command = solve") != std::string::npos);
    CHECK(m.find("config:") != std::string::npos);
    CHECK(m.find("end config") != std::string::npos);
    CHECK(m.find("type = I") != std::string::npos);
    CHECK(m.find("left_event = ") != std::string::npos);
    CHECK(m.find("right_event = ") != std::string::npos);
    CHECK(m.find("alpha_numeric = ") != std::string::npos);
    CHECK(m.find("[environment]") != std::string::npos);
}

TEST_CASE("shoot and classify produce the smooth types") {
    fs::path d = fresh_dir("shoot");
    REQUIRE(run("shoot --kind cp --n 2 --end origin --out " + (d / "o.csv").string() +
                " --manifest " + (d / "om.txt").string()) == 0);
    CHECK(slurp(d / "om.txt").find("type = IV") != std::string::npos);
    REQUIRE(run("shoot --kind cp --n 2 --end focal --out " + (d / "f.csv").string() +
                " --manifest " + (d / "fm.txt").string()) == 0);
    CHECK(slurp(d / "fm.txt").find("type = V") != std::string::npos);
    REQUIRE(run("classify --kind sphere --n 3 --s0 2.2 --dv0 0 --manifest " +
                (d / "cm.txt").string()) == 0);
    CHECK(slurp(d / "cm.txt").find("type = ") != std::string::npos);
}

TEST_CASE("identical runs produce byte-identical artifacts") {
    fs::path d1 = fresh_dir("det1"), d2 = fresh_dir("det2");
    std::string args = "solve --kind cp --n 2 --s0 2.1 --dv0 0.4";
    REQUIRE(run(args + " --out " + (d1 / "t.csv").string() + " --manifest " +
                (d1 / "m.txt").string()) == 0);
    REQUIRE(run(args + " --out " + (d2 / "t.csv").string() + " --manifest " +
                (d2 / "m.txt").string()) == 0);
    CHECK(slurp(d1 / "t.csv") == slurp(d2 / "t.csv"));
    std::string m1 = slurp(d1 / "m.txt"), m2 = slurp(d2 / "m.txt");
    // Only the output paths and timestamp may differ; normalize the paths.
    std::string s1 = stable_part(m1), s2 = stable_part(m2);
    size_t pos;
    while ((pos = s1.find("det1")) != std::string::npos) s1.replace(pos, 4, "detX");
    while ((pos = s2.find("det2")) != std::string::npos) s2.replace(pos, 4, "detX");
    CHECK(s1 == s2);
}

TEST_CASE("the recorded config block reruns to the same bytes") {
    fs::path d = fresh_dir("rerun");
    std::string out = (d / "t.csv").string(), man = (d / "m.txt").string();
    REQUIRE(run("solve --kind cp --n 2 --s0 1.9 --dv0 -0.3 --rtol 1e-9 --out " + out +
                " --manifest " + man) == 0);
    std::string manifest = slurp(man);
    std::istringstream in(manifest);
    std::ostringstream conf;
    std::string line;
    bool inside = false;
    while (std::getline(in, line)) {
        if (line == "end config") inside = false;
        if (inside) conf << line << '\n';
        if (line == "config:") inside = true;
    }
    std::string config_text = conf.str();
    REQUIRE(config_text.find("s0 = ") != std::string::npos);
    REQUIRE(config_text.find("rtol = ") != std::string::npos);
    std::ofstream(d / "rerun.conf") << config_text;

    std::string original = slurp(out);
    fs::remove(out);
    REQUIRE(run("solve --config " + (d / "rerun.conf").string()) == 0);
    CHECK(slurp(out) == original);

    // Explicit flags still win over the config file.
    REQUIRE(run("solve --config " + (d / "rerun.conf").string() + " --out " +
                (d / "t2.csv").string()) == 0);
    CHECK(slurp(d / "t2.csv") == original);

    // Unknown keys in a config file are a configuration error.
    std::ofstream(d / "bad.conf") << "definitely-not-an-option = 3\n";
    CHECK(run("solve --config " + (d / "bad.conf").string()) == 2);
    CHECK(run("solve --config " + (d / "missing.conf").string()) == 2);
}

TEST_CASE("sweep respects the thread cap and reports counts") {
    fs::path d = fresh_dir("sweep");
    std::string io = " --out " + (d / "s.csv").string() + " --manifest " + (d / "m.txt").string() +
                     " --rep-prefix " + (d / "rep_").string();
    REQUIRE(run_env("TRANSLATOR_LAB_THREADS=1",
                    "sweep --kind cp --n 2 --ns 5 --nslopes 5" + io) == 0);
    std::string csv = slurp(d / "s.csv");
    CHECK(first_line(csv) == "s0,slope,left,right,type");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 5 * 5 + 2 + 1);  // grid + shots + header
    std::string m = slurp(d / "m.txt");
    CHECK(m.find("translator_lab_threads = 1") != std::string::npos);
    CHECK(m.find("unclassified = 0") != std::string::npos);
    CHECK(m.find("type_IV") != std::string::npos);
    // Representative traces referenced by the manifest exist on disk.
    CHECK(m.find((d / "rep_").string()) != std::string::npos);
    bool any_rep = false;
    for (auto& e : fs::directory_iterator(d))
        if (e.path().filename().string().rfind("rep_", 0) == 0) any_rep = true;
    CHECK(any_rep);
}

TEST_CASE("phase run emits the substituted trace") {
    fs::path d = fresh_dir("phase");
    REQUIRE(run("phase --n 2 --x0 1 --psi0 3 --x-lo 0.05 --x-hi 1.5 --out " +
                (d / "p.csv").string() + " --manifest " + (d / "m.txt").string()) == 0);
    CHECK(first_line(slurp(d / "p.csv")) == "x,psi");
    std::string m = slurp(d / "m.txt");
    CHECK(m.find("region_sign_at_ic") != std::string::npos);
    CHECK(m.find("comparison_bound_at_x_lo") != std::string::npos);
}

TEST_CASE("flowcheck reports drift against pure translation") {
    fs::path d = fresh_dir("flow");
    REQUIRE(run("flowcheck --kind cp --n 2 --cells 24 --horizon 0.1 --out " +
                (d / "f.csv").string() + " --manifest " + (d / "m.txt").string()) == 0);
    CHECK(first_line(slurp(d / "f.csv")) == "s,u_final,u_expected,abs_err");
    std::string m = slurp(d / "m.txt");
    CHECK(m.find("drift = ") != std::string::npos);
    CHECK(m.find("horizon = 0.1") != std::string::npos);
}

TEST_CASE("hermann run records the variant cross-check") {
    fs::path d = fresh_dir("hermann");
    REQUIRE(run("hermann --layout A1xA1 --t-lo -0.2 --t-hi 0.4 --probe 20 --out " +
                (d / "c.csv").string() + " --manifest " + (d / "m.txt").string()) == 0);
    CHECK(first_line(slurp(d / "c.csv")) == "t,x1,x2,Fhat,V");
    std::string m = slurp(d / "m.txt");
    CHECK(m.find("fhat_variant = cubic") != std::string::npos);
    CHECK(m.find("residual_max_cubic = ") != std::string::npos);
    CHECK(m.find("residual_max_quadratic = ") != std::string::npos);
    CHECK(m.find("consistent_variant = cubic") != std::string::npos);
    CHECK(m.find("dvdt_deviation_max = ") != std::string::npos);
    CHECK(m.find("f_value = -0.5") != std::string::npos);
    CHECK(m.find("jacobian_psd_failures = 20/20") != std::string::npos);
    CHECK(m.find("concave") != std::string::npos);

    // Table export and reuse through the table layout.
    REQUIRE(run("hermann --layout B2 --t-lo -0.1 --t-hi 0.1 --probe 5 --save-table " +
                (d / "field.csv").string() + " --out " + (d / "c2.csv").string() +
                " --manifest " + (d / "m2.txt").string()) == 0);
    REQUIRE(fs::exists(d / "field.csv"));
    CHECK(first_line(slurp(d / "field.csv")) == "x1,x2,X1,X2");
    CHECK(run("hermann --layout table --table " + (d / "field.csv").string() +
              " --t-lo -0.05 --t-hi 0.05 --probe 5 --out " + (d / "c3.csv").string() +
              " --manifest " + (d / "m3.txt").string()) == 0);
    std::string m3 = slurp(d / "m3.txt");
    CHECK(m3.find("field_variant = user_supplied") != std::string::npos);
}

TEST_CASE("fan runs write one trace per seed") {
    fs::path d = fresh_dir("fan");
    REQUIRE(run("hermann --layout A1xA1 --x1 1.2 --x2 1.3 --fan 3 --spread 0.2 --t-lo -0.1 "
                "--t-hi 0.3 --probe 5 --out-prefix " + (d / "fan_").string() +
                " --manifest " + (d / "m.txt").string()) == 0);
    for (int i = 0; i < 3; ++i)
        CHECK(fs::exists(d / ("fan_" + std::to_string(i) + ".csv")));
    CHECK(slurp(d / "m.txt").find("curves = 3") != std::string::npos);
}
