// vesselseg: command-line front end for the vessel segmentation library.
//
// Exit codes: 0 success, 1 runtime or I/O failure, 2 usage error.

#include <CLI11.hpp>

#include <vesselseg/vesselseg.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using namespace vesselseg;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

/// Thrown for argument problems detected after CLI11 parsing.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string with_default(const std::string& text, const std::string& value)
{
    return text + " [default: " + value + "]";
}

std::string fmt_double(double v)
{
    std::ostringstream s;
    s << v;
    return s.str();
}

std::string fmt_pair(const FractionPair& p) { return fmt_double(p.low) + "," + fmt_double(p.high); }

/// Pipeline flags shared by `segment` and `ablate`.
struct PipelineFlags {
    std::string config_path;
    std::optional<double> sigma_low;
    std::optional<double> sigma_high;
    std::optional<std::string> frac_low;
    std::optional<std::string> frac_high;
    std::optional<double> min_component_mm3;
    std::optional<double> percentile;
    std::optional<int> connectivity;
    std::optional<unsigned> threads;

    void attach(CLI::App& cmd)
    {
        const PipelineConfig d;
        cmd.add_option("--config", config_path, "Key/value configuration file (flags override it)")
            ->envname("VESSELSEG_CONFIG")
            ->check(CLI::ExistingFile);
        cmd.add_option("--sigma-low", sigma_low, with_default("Small-vessel Gaussian scale in mm", fmt_double(d.sigma_low_mm)));
        cmd.add_option("--sigma-high", sigma_high,
                       with_default("Large-vessel Gaussian scale in mm", fmt_double(d.sigma_high_mm)));
        cmd.add_option("--frac-low", frac_low,
                       with_default("Low,high threshold fractions of the anchor for the small-vessel scale",
                                    fmt_pair(d.frac_low_scale)));
        cmd.add_option("--frac-high", frac_high,
                       with_default("Low,high threshold fractions of the anchor for the large-vessel scale",
                                    fmt_pair(d.frac_high_scale)));
        cmd.add_option("--min-component-mm3", min_component_mm3,
                       with_default("Clusters smaller than this volume (mm^3) are removed",
                                    fmt_double(d.min_component_mm3)));
        cmd.add_option("--percentile", percentile,
                       with_default("Anchor percentile of positive vesselness", fmt_double(d.percentile)));
        cmd.add_option("--connectivity", connectivity,
                       with_default("Voxel adjacency for hysteresis and components", "26"))
            ->check(CLI::IsMember({6, 18, 26}));
        cmd.add_option("--threads", threads, "Worker threads, 0 = all cores; output does not depend on it [default: 1]");
    }

    [[nodiscard]] PipelineConfig resolve() const
    {
        PipelineConfig cfg;
        if (!config_path.empty()) {
            cfg = load_config(config_path);
        }
        if (sigma_low) cfg.sigma_low_mm = *sigma_low;
        if (sigma_high) cfg.sigma_high_mm = *sigma_high;
        if (frac_low) apply_setting(cfg, "frac_low_scale", *frac_low);
        if (frac_high) apply_setting(cfg, "frac_high_scale", *frac_high);
        if (min_component_mm3) cfg.min_component_mm3 = *min_component_mm3;
        if (percentile) cfg.percentile = *percentile;
        if (connectivity) cfg.connectivity = connectivity_from_int(*connectivity);
        if (threads) cfg.threads = *threads;
        cfg.validate();
        return cfg;
    }
};

/// Converts configuration problems into usage errors.
PipelineConfig resolve_or_usage(const PipelineFlags& flags)
{
    try {
        return flags.resolve();
    } catch (const ParameterError& e) {
        throw UsageError(e.what());
    }
}

std::string describe(const std::optional<BranchResult>& b)
{
    if (!b) {
        return "skipped";
    }
    if (!b->thresholds) {
        return "none";
    }
    std::ostringstream s;
    s << std::setprecision(6) << b->thresholds->low() << "-" << b->thresholds->high();
    return s.str();
}

void save_intermediates(const PipelineResult& r, const fs::path& dir)
{
    fs::create_directories(dir);
    if (r.fine) {
        write_nifti(r.fine->vesselness.scores, dir / "vesselness_sigma_low.nii.gz");
        write_nifti(r.fine->mask, dir / "mask_sigma_low.nii.gz");
    }
    if (r.coarse) {
        write_nifti(r.coarse->vesselness.scores, dir / "vesselness_sigma_high.nii.gz");
        write_nifti(r.coarse->mask, dir / "mask_sigma_high.nii.gz");
    }
    write_nifti(r.merged, dir / "mask_union.nii.gz");
}

int cmd_segment(const std::string& input, const std::string& output, const PipelineFlags& flags,
                const std::string& intermediates)
{
    const PipelineConfig cfg = resolve_or_usage(flags);
    const Volume3D vol = read_nifti(input);
    const PipelineResult r = run_pipeline(vol, cfg, AblationVariant::Full);
    write_nifti(r.mask, output);
    if (!intermediates.empty()) {
        save_intermediates(r, intermediates);
    }
    std::cout << "voxels=" << count_set(r.mask) << " components=" << r.components_after
              << " thresholds_sigma_low=" << describe(r.fine) << " thresholds_sigma_high=" << describe(r.coarse)
              << '\n';
    return kExitOk;
}

int cmd_ablate(const std::string& input, const std::string& outdir, const PipelineFlags& flags,
               const std::string& ground_truth)
{
    const PipelineConfig cfg = resolve_or_usage(flags);
    const Volume3D vol = read_nifti(input);
    std::optional<BinaryMask> truth;
    if (!ground_truth.empty()) {
        truth = read_mask(ground_truth);
        require_same_grid(vol, *truth, "ablate");
    }
    std::error_code ec;
    fs::create_directories(outdir, ec);
    if (ec) {
        throw WriteError("cannot create output directory " + outdir + ": " + ec.message());
    }
    for (const auto variant : kAllVariants) {
        const std::string name(to_string(variant));
        const PipelineResult r = run_pipeline(vol, cfg, variant);
        write_nifti(r.mask, fs::path(outdir) / (name + ".nii.gz"));
        std::cout << name << ": voxels=" << count_set(r.mask) << " components=" << r.components_after;
        if (truth) {
            const EvalReport report = evaluate(r.mask, *truth, {}, cfg.connectivity);
            const fs::path report_path = fs::path(outdir) / (name + "_report.txt");
            std::ofstream out(report_path);
            write_report(out, report);
            if (!out) {
                throw WriteError("cannot write " + report_path.string());
            }
            std::cout << " dice=" << report.dice;
        }
        std::cout << '\n';
    }
    return kExitOk;
}

int cmd_enhance(const std::string& input, const std::string& output, double sigma, const SatoParams& sato,
                unsigned threads)
{
    const Volume3D vol = read_nifti(input);
    const VesselnessMap map = vessel_enhance(vol, sigma, sato, threads);
    write_nifti(map.scores, output);
    return kExitOk;
}

int cmd_phantom(const std::string& spec_path, const std::string& prefix, unsigned threads)
{
    PhantomSpec spec;
    try {
        spec = load_phantom_spec(spec_path);
    } catch (const ParameterError& e) {
        throw UsageError(std::string("malformed phantom spec: ") + e.what());
    }
    const Phantom ph = generate_phantom(spec, threads);
    write_nifti(ph.volume, prefix + "_volume.nii.gz");
    write_nifti(ph.truth, prefix + "_truth.nii.gz");
    for (std::size_t k = 0; k < ph.tubes.size(); ++k) {
        write_nifti(ph.tubes[k].mask, prefix + "_tube" + std::to_string(k) + ".nii.gz");
    }
    std::cout << "truth_voxels=" << count_set(ph.truth) << " tubes=" << ph.tubes.size()
              << " noise_generator=" << kNoiseGenerator << '\n';
    return kExitOk;
}

int cmd_eval(const std::string& pred_path, const std::string& truth_path, const std::string& report_path,
             int connectivity)
{
    const BinaryMask pred = read_mask(pred_path);
    const BinaryMask truth = read_mask(truth_path);
    const EvalReport report = evaluate(pred, truth, {}, connectivity_from_int(connectivity));
    write_report(std::cout, report);
    if (!report_path.empty()) {
        std::ofstream out(report_path);
        write_report(out, report);
        if (!out) {
            throw WriteError("cannot write " + report_path);
        }
    }
    return kExitOk;
}

int cmd_info(const std::string& input)
{
    NiftiInfo info;
    const Volume3D vol = read_nifti(input, &info);
    const auto& d = vol.dims();
    const auto& s = vol.spacing();
    std::cout << "dims: " << d.nx << " x " << d.ny << " x " << d.nz << '\n'
              << "spacing: " << s.sx << " " << s.sy << " " << s.sz << " mm\n"
              << "voxel_volume: " << voxel_volume(vol) << " mm^3\n"
              << "datatype: " << to_string(info.datatype) << '\n'
              << "scl_slope: " << info.scl_slope << " scl_inter: " << info.scl_inter << '\n';
    const auto [lo, hi] = std::minmax_element(vol.begin(), vol.end());
    std::cout << "min: " << *lo << " max: " << *hi << '\n';
    std::cout << "percentiles (all voxels):";
    for (const double p : {1.0, 50.0, 99.0, 99.9}) {
        std::cout << " p" << p << "=" << percentile(vol, p, false);
    }
    std::cout << '\n';
    if (has_positive(vol)) {
        std::cout << "percentiles (positive voxels):";
        for (const double p : {1.0, 50.0, 99.0, 99.9}) {
            std::cout << " p" << p << "=" << percentile(vol, p, true);
        }
        std::cout << '\n';
    } else {
        std::cout << "percentiles (positive voxels): none\n";
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Cerebral vessel segmentation for skull-stripped, bias-corrected TOF-MRA volumes"};
    app.require_subcommand(1);

    std::string input;
    std::string output;
    std::string intermediates;
    std::string ground_truth;
    std::string report_path;

    PipelineFlags seg_flags;
    auto* seg = app.add_subcommand("segment", "Segment vessels from a NIfTI volume");
    seg->add_option("input", input, "Input volume (.nii or .nii.gz)")->required()->check(CLI::ExistingFile);
    seg->add_option("output", output, "Output mask (.nii or .nii.gz)")->required();
    seg->add_option("--save-intermediates", intermediates, "Directory for vesselness maps and branch masks");
    seg_flags.attach(*seg);

    PipelineFlags abl_flags;
    auto* abl = app.add_subcommand("ablate", "Run the full method and each single-step removal");
    abl->add_option("input", input, "Input volume")->required()->check(CLI::ExistingFile);
    abl->add_option("outdir", output, "Directory for one mask per variant")->required();
    abl->add_option("--ground-truth", ground_truth, "Truth mask; writes <variant>_report.txt")
        ->check(CLI::ExistingFile);
    abl_flags.attach(*abl);

    double sigma = 0.0;
    SatoParams sato;
    unsigned enh_threads = 1;
    auto* enh = app.add_subcommand("enhance", "Write the line-filter response at one scale");
    enh->add_option("input", input, "Input volume")->required()->check(CLI::ExistingFile);
    enh->add_option("output", output, "Output vesselness volume")->required();
    enh->add_option("--sigma", sigma, "Gaussian scale in mm")->required()->check(CLI::PositiveNumber);
    enh->add_option("--gamma23", sato.gamma23, "Exponent on l2/l3")->capture_default_str()->check(CLI::PositiveNumber);
    enh->add_option("--gamma12", sato.gamma12, "Exponent on the l1 weight")->capture_default_str()->check(CLI::PositiveNumber);
    enh->add_option("--alpha", sato.alpha, "Penalty on positive l1")->capture_default_str()->check(CLI::PositiveNumber);
    enh->add_option("--threads", enh_threads, "Worker threads, 0 = all cores")->capture_default_str();

    unsigned ph_threads = 1;
    auto* ph = app.add_subcommand("phantom", "Generate a synthetic tube phantom with ground truth");
    ph->add_option("spec", input, "Phantom description file")->required()->check(CLI::ExistingFile);
    ph->add_option("prefix", output, "Output prefix (writes _volume, _truth, _tubeN .nii.gz)")->required();
    ph->add_option("--threads", ph_threads, "Worker threads, 0 = all cores")->capture_default_str();

    int eval_connectivity = 26;
    auto* ev = app.add_subcommand("eval", "Score a predicted mask against a truth mask");
    ev->add_option("prediction", input, "Predicted mask")->required()->check(CLI::ExistingFile);
    ev->add_option("--ground-truth", ground_truth, "Truth mask")->required()->check(CLI::ExistingFile);
    ev->add_option("--report", report_path, "Also write the report to this file");
    ev->add_option("--connectivity", eval_connectivity, "Adjacency for component counts")
        ->capture_default_str()
        ->check(CLI::IsMember({6, 18, 26}));

    auto* inf = app.add_subcommand("info", "Print geometry, datatype and intensity percentiles");
    inf->add_option("input", input, "Input volume")->required()->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return kExitUsage;
    }

    try {
        if (seg->parsed()) return cmd_segment(input, output, seg_flags, intermediates);
        if (abl->parsed()) return cmd_ablate(input, output, abl_flags, ground_truth);
        if (enh->parsed()) return cmd_enhance(input, output, sigma, sato, enh_threads);
        if (ph->parsed()) return cmd_phantom(input, output, ph_threads);
        if (ev->parsed()) return cmd_eval(input, ground_truth, report_path, eval_connectivity);
        if (inf->parsed()) return cmd_info(input);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitUsage;
}
