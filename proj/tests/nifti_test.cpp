#include <gtest/gtest.h>

#include <cstdint>
#include <fstream>
#include <limits>
#include <random>

#include "oracles.hpp"

namespace vesselseg {
namespace {

namespace fs = std::filesystem;

class NiftiTest : public ::testing::Test {
protected:
    void SetUp() override
    {
        dir_ = oracle::temp_dir(::testing::UnitTest::GetInstance()->current_test_info()->name());
    }
    void TearDown() override { fs::remove_all(dir_); }

    [[nodiscard]] fs::path path(const std::string& name) const { return dir_ / name; }

    fs::path dir_;
};

oracle::HandHeader ixi_header()
{
    oracle::HandHeader h;
    h.pixdim = {1.0F, 0.47F, 0.47F, 0.8F, 1.0F, 0.0F, 0.0F, 0.0F};
    return h;
}

const std::vector<float> kEight{0.5F, -1.25F, 2.0F, 3.75F, 1e-3F, 100.0F, -7.5F, 42.0F};

TEST_F(NiftiTest, ReadsHandWrittenFloatVolume)
{
    oracle::write_hand_nifti(path("v.nii"), ixi_header(), oracle::as_bytes(kEight), 4);
    NiftiInfo info;
    const auto vol = read_nifti(path("v.nii"), &info);
    EXPECT_EQ(vol.dims(), (Dims{2, 2, 2}));
    EXPECT_EQ(vol.spacing().sx, static_cast<double>(0.47F));
    EXPECT_EQ(vol.spacing().sy, static_cast<double>(0.47F));
    EXPECT_EQ(vol.spacing().sz, static_cast<double>(0.8F));
    EXPECT_EQ(info.datatype, NiftiDatatype::Float32);
    for (std::size_t i = 0; i < 8; ++i) {
        EXPECT_EQ(vol[i], static_cast<double>(kEight[i]));
    }
}

TEST_F(NiftiTest, ReadsBigEndianFile)
{
    auto h = ixi_header();
    h.big_endian = true;
    oracle::write_hand_nifti(path("be.nii"), h, oracle::as_bytes(kEight), 4);
    NiftiInfo info;
    const auto vol = read_nifti(path("be.nii"), &info);
    EXPECT_TRUE(info.byte_swapped);
    EXPECT_EQ(vol.spacing().sz, static_cast<double>(0.8F));
    for (std::size_t i = 0; i < 8; ++i) {
        EXPECT_EQ(vol[i], static_cast<double>(kEight[i]));
    }
}

TEST_F(NiftiTest, AppliesSlopeAndIntercept)
{
    auto h = ixi_header();
    h.dim = {3, 2, 1, 1, 1, 1, 1, 1};
    h.datatype = 2;
    h.bitpix = 8;
    h.scl_slope = 2.0F;
    h.scl_inter = 1.0F;
    oracle::write_hand_nifti(path("s.nii"), h, {0, 1}, 1);
    const auto vol = read_nifti(path("s.nii"));
    ASSERT_EQ(vol.size(), 2U);
    EXPECT_EQ(vol[0], 2.0 * 0 + 1.0);
    EXPECT_EQ(vol[1], 2.0 * 1 + 1.0);
}

TEST_F(NiftiTest, ZeroSlopeMeansUnscaled)
{
    auto h = ixi_header();
    h.scl_slope = 0.0F;
    h.scl_inter = 5.0F;
    oracle::write_hand_nifti(path("z.nii"), h, oracle::as_bytes(kEight), 4);
    EXPECT_EQ(read_nifti(path("z.nii"))[0], static_cast<double>(kEight[0]));
}

TEST_F(NiftiTest, ReadsIntegerTypesAndSingletonFourthDim)
{
    auto h = ixi_header();
    h.dim = {4, 2, 2, 2, 1, 1, 1, 1};
    h.datatype = 4;
    h.bitpix = 16;
    const std::vector<std::int16_t> s16{-300, 0, 1, 2, 3, 4, 5, 32000};
    oracle::write_hand_nifti(path("i16.nii"), h, oracle::as_bytes(s16), 2);
    const auto a = read_nifti(path("i16.nii"));
    EXPECT_EQ(a[0], -300.0);
    EXPECT_EQ(a[7], 32000.0);

    h.datatype = 8;
    h.bitpix = 32;
    const std::vector<std::int32_t> s32{-70000, 1, 2, 3, 4, 5, 6, 70000};
    oracle::write_hand_nifti(path("i32.nii"), h, oracle::as_bytes(s32), 4);
    EXPECT_EQ(read_nifti(path("i32.nii"))[7], 70000.0);

    h.datatype = 64;
    h.bitpix = 64;
    const std::vector<double> f64{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 1.0 / 3.0};
    oracle::write_hand_nifti(path("f64.nii"), h, oracle::as_bytes(f64), 8);
    EXPECT_EQ(read_nifti(path("f64.nii"))[7], 1.0 / 3.0);
}

TEST_F(NiftiTest, RejectsWrongHeaderSize)
{
    auto h = ixi_header();
    h.sizeof_hdr = 540;
    oracle::write_hand_nifti(path("bad.nii"), h, oracle::as_bytes(kEight), 4);
    EXPECT_THROW((void)read_nifti(path("bad.nii")), CorruptFileError);
}

TEST_F(NiftiTest, RejectsBadMagic)
{
    auto h = ixi_header();
    h.magic[1] = 'i';  // "ni1": header/image pair, not single file
    oracle::write_hand_nifti(path("pair.nii"), h, oracle::as_bytes(kEight), 4);
    EXPECT_THROW((void)read_nifti(path("pair.nii")), FormatError);
}

TEST_F(NiftiTest, RejectsUnsupportedDatatype)
{
    auto h = ixi_header();
    h.datatype = 512;  // uint16
    h.bitpix = 16;
    oracle::write_hand_nifti(path("u16.nii"), h, std::vector<unsigned char>(16, 0), 2);
    EXPECT_THROW((void)read_nifti(path("u16.nii")), UnsupportedDatatypeError);
}

TEST_F(NiftiTest, RejectsTruncatedData)
{
    oracle::write_hand_nifti(path("short.nii"), ixi_header(),
                             oracle::as_bytes(std::vector<float>(kEight.begin(), kEight.begin() + 5)), 4);
    EXPECT_THROW((void)read_nifti(path("short.nii")), CorruptFileError);
}

TEST_F(NiftiTest, RejectsNonPositivePixdim)
{
    auto h = ixi_header();
    h.pixdim[2] = 0.0F;
    oracle::write_hand_nifti(path("pix.nii"), h, oracle::as_bytes(kEight), 4);
    EXPECT_THROW((void)read_nifti(path("pix.nii")), InvalidGeometryError);
}

TEST_F(NiftiTest, RejectsNonFiniteIntensities)
{
    auto values = kEight;
    values[3] = std::numeric_limits<float>::quiet_NaN();
    oracle::write_hand_nifti(path("nan.nii"), ixi_header(), oracle::as_bytes(values), 4);
    EXPECT_THROW((void)read_nifti(path("nan.nii")), CorruptFileError);
    values[3] = std::numeric_limits<float>::infinity();
    oracle::write_hand_nifti(path("inf.nii"), ixi_header(), oracle::as_bytes(values), 4);
    EXPECT_THROW((void)read_nifti(path("inf.nii")), CorruptFileError);
}

TEST_F(NiftiTest, RejectsMultiFrameVolume)
{
    auto h = ixi_header();
    h.dim = {4, 2, 2, 1, 2, 1, 1, 1};
    oracle::write_hand_nifti(path("4d.nii"), h, oracle::as_bytes(kEight), 4);
    EXPECT_THROW((void)read_nifti(path("4d.nii")), InvalidGeometryError);
}

TEST_F(NiftiTest, MissingFileIsReadError)
{
    EXPECT_THROW((void)read_nifti(path("absent.nii.gz")), ReadError);
}

TEST_F(NiftiTest, RoundTripOfHandWrittenVolume)
{
    oracle::write_hand_nifti(path("v.nii"), ixi_header(), oracle::as_bytes(kEight), 4);
    const auto a = read_nifti(path("v.nii"));
    write_nifti(a, path("w.nii.gz"));
    const auto b = read_nifti(path("w.nii.gz"));
    EXPECT_EQ(a.dims(), b.dims());
    EXPECT_EQ(a.spacing(), b.spacing());
    EXPECT_TRUE(std::equal(a.begin(), a.end(), b.begin()));
}

TEST_F(NiftiTest, OrientationSurvivesRoundTrip)
{
    Geometry g{{3, 3, 3}, {0.5, 0.5, 1.0}, {}};
    g.orientation.qform_code = 1;
    g.orientation.sform_code = 2;
    g.orientation.quatern_b = 0.25F;
    g.orientation.qoffset_z = -12.5F;
    g.orientation.qfac = -1.0F;
    g.orientation.srow_x = {-0.5F, 0.0F, 0.0F, 90.0F};
    g.orientation.srow_y = {0.0F, 0.5F, 0.0F, -126.0F};
    g.orientation.srow_z = {0.0F, 0.0F, 1.0F, -72.0F};
    const Volume3D vol(g, 1.0);
    write_nifti(vol, path("o.nii"));
    EXPECT_EQ(read_nifti(path("o.nii")).orientation(), g.orientation);
}

TEST_F(NiftiTest, MaskIsWrittenAsUint8)
{
    BinaryMask m(Geometry{{4, 4, 4}, {0.47, 0.47, 0.8}, {}});
    m(0, 0, 0) = 1;
    m(1, 2, 3) = 1;
    m(3, 3, 3) = 1;
    write_nifti(m, path("m.nii.gz"));
    NiftiInfo info;
    const auto back = read_nifti(path("m.nii.gz"), &info);
    EXPECT_EQ(info.datatype, NiftiDatatype::UInt8);
    EXPECT_EQ(info.scl_slope, 1.0);
    EXPECT_EQ(info.scl_inter, 0.0);
    EXPECT_EQ(std::accumulate(back.begin(), back.end(), 0.0), 3.0);
    // Spacing goes through float32 in the header, so compare voxels only.
    const auto mask = read_mask(path("m.nii.gz"));
    EXPECT_EQ(mask.dims(), m.dims());
    EXPECT_TRUE(std::equal(mask.begin(), mask.end(), m.begin()));
}

TEST_F(NiftiTest, WriteToMissingDirectoryFails)
{
    const Volume3D vol(Geometry{{2, 2, 2}, {}, {}}, 1.0);
    EXPECT_THROW(write_nifti(vol, path("no/such/dir/v.nii")), WriteError);
    EXPECT_THROW(write_nifti(vol, path("no/such/dir/v.nii.gz")), WriteError);
}

TEST_F(NiftiTest, DoublePrecisionDataIsStoredLosslessly)
{
    Volume3D vol(Geometry{{2, 2, 2}, {1, 1, 1}, {}}, 0.1);  // 0.1 is not a float
    write_nifti(vol, path("d.nii"));
    NiftiInfo info;
    const auto back = read_nifti(path("d.nii"), &info);
    EXPECT_EQ(info.datatype, NiftiDatatype::Float64);
    EXPECT_EQ(back[0], 0.1);
}

TEST_F(NiftiTest, ReadWriteReadIsIdentityOnRandomFloatVolumes)
{
    std::mt19937_64 rng(17);
    std::uniform_int_distribution<int> side(1, 12);
    std::uniform_real_distribution<float> val(-1000.0F, 1000.0F);
    std::uniform_real_distribution<float> sp(0.1F, 3.0F);
    for (int trial = 0; trial < 6; ++trial) {
        oracle::HandHeader h;
        h.dim = {3, static_cast<short>(side(rng)), static_cast<short>(side(rng)), static_cast<short>(side(rng)), 1, 1, 1, 1};
        h.pixdim = {1.0F, sp(rng), sp(rng), sp(rng), 1.0F, 0.0F, 0.0F, 0.0F};
        std::vector<float> values(static_cast<std::size_t>(h.dim[1] * h.dim[2] * h.dim[3]));
        for (float& v : values) {
            v = val(rng);
        }
        oracle::write_hand_nifti(path("r.nii"), h, oracle::as_bytes(values), 4);
        const auto first = read_nifti(path("r.nii"));
        for (const char* name : {"rt.nii", "rt.nii.gz"}) {
            write_nifti(first, path(name));
            const auto second = read_nifti(path(name));
            EXPECT_EQ(first.dims(), second.dims());
            EXPECT_EQ(first.spacing(), second.spacing());
            EXPECT_TRUE(std::equal(first.begin(), first.end(), second.begin()));
        }
    }
}

}  // namespace
}  // namespace vesselseg
