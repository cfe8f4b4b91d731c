#include "dysfluency/audio.hpp"
#include "dysfluency/errors.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

namespace dysfluency {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint32_t read_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const std::uint8_t* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

double decode_sample(const std::uint8_t* p, std::uint16_t format, std::uint16_t bits) {
    if (format == kFormatFloat) {
        if (bits == 32) {
            return static_cast<double>(std::bit_cast<float>(read_u32(p)));
        }
        std::uint64_t raw = 0;
        for (int i = 0; i < 8; ++i) raw |= static_cast<std::uint64_t>(p[i]) << (8 * i);
        return std::bit_cast<double>(raw);
    }
    switch (bits) {
    case 8:
        return (static_cast<int>(p[0]) - 128) / 128.0;
    case 16:
        return static_cast<std::int16_t>(read_u16(p)) / 32768.0;
    case 24: {
        std::int32_t v = p[0] | (p[1] << 8) | (p[2] << 16);
        if (v & 0x800000) v |= ~0xFFFFFF;
        return v / 8388608.0;
    }
    default:
        return static_cast<std::int32_t>(read_u32(p)) / 2147483648.0;
    }
}

}  // namespace

AudioBuffer decode_wav(std::span<const std::uint8_t> bytes, std::string_view origin) {
    const auto fail = [&](const std::string& why) {
        return FormatError(std::string(origin) + ": " + why);
    };
    if (bytes.size() < 12) throw fail("corrupt header (file too short for RIFF/WAVE)");
    if (std::memcmp(bytes.data(), "RIFF", 4) != 0 || std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
        throw fail("corrupt header (missing RIFF/WAVE signature)");
    }

    std::uint16_t format = 0, channels = 0, bits = 0, block_align = 0;
    std::uint32_t rate = 0;
    bool have_fmt = false;
    std::span<const std::uint8_t> data;
    bool have_data = false;

    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const std::uint8_t* chunk = bytes.data() + pos;
        const std::uint32_t size = read_u32(chunk + 4);
        const std::size_t body = pos + 8;
        const std::size_t available = bytes.size() - body;
        if (std::memcmp(chunk, "fmt ", 4) == 0) {
            if (size < 16 || available < 16) throw fail("corrupt header (truncated fmt chunk)");
            const std::uint8_t* f = bytes.data() + body;
            format = read_u16(f);
            channels = read_u16(f + 2);
            rate = read_u32(f + 4);
            block_align = read_u16(f + 12);
            bits = read_u16(f + 14);
            if (format == kFormatExtensible) {
                if (size < 40 || available < 40) throw fail("corrupt header (truncated extensible fmt)");
                format = read_u16(f + 24);  // first two bytes of the sub-format GUID
            }
            have_fmt = true;
        } else if (std::memcmp(chunk, "data", 4) == 0) {
            // Streams written without a final size commonly leave 0 or 0xFFFFFFFF here.
            const std::size_t len = (size == 0 || size > available) ? available : size;
            data = bytes.subspan(body, len);
            have_data = true;
            break;
        }
        if (size > available) break;
        pos = body + size + (size & 1u);
    }

    if (!have_fmt) throw fail("corrupt header (no fmt chunk)");
    if (!have_data) throw fail("corrupt header (no data chunk)");
    if (format != kFormatPcm && format != kFormatFloat) {
        throw fail("unsupported codec (format tag " + std::to_string(format) + "); only PCM and IEEE float");
    }
    const bool bits_ok = format == kFormatPcm ? (bits == 8 || bits == 16 || bits == 24 || bits == 32)
                                              : (bits == 32 || bits == 64);
    if (!bits_ok) throw fail("unsupported codec (" + std::to_string(bits) + "-bit samples)");
    if (channels == 0) throw fail("corrupt header (zero channels)");
    if (rate == 0) throw fail("corrupt header (zero sample rate)");
    const std::size_t bytes_per_sample = bits / 8;
    if (block_align != channels * bytes_per_sample) throw fail("corrupt header (inconsistent block align)");

    const std::size_t frames = data.size() / block_align;
    if (frames == 0) throw fail("empty file (no samples)");

    AudioBuffer out;
    out.sample_rate = static_cast<int>(rate);
    out.samples.resize(frames);
    for (std::size_t i = 0; i < frames; ++i) {
        const std::uint8_t* frame = data.data() + i * block_align;
        double acc = 0.0;
        for (std::size_t c = 0; c < channels; ++c) acc += decode_sample(frame + c * bytes_per_sample, format, bits);
        double v = acc / channels;
        if (!std::isfinite(v)) throw fail("non-finite sample at frame " + std::to_string(i));
        out.samples[i] = std::clamp(v, -1.0, 1.0);
    }
    return out;
}

AudioBuffer load_audio(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open audio file '" + path.string() + "'");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("failed reading audio file '" + path.string() + "'");
    return decode_wav(bytes, path.string());
}

std::vector<std::uint8_t> encode_wav(const AudioBuffer& audio) {
    const auto data_bytes = static_cast<std::uint32_t>(audio.samples.size() * 4);
    std::vector<std::uint8_t> out;
    out.reserve(44 + data_bytes);
    out.insert(out.end(), {'R', 'I', 'F', 'F'});
    put_u32(out, 36 + data_bytes);
    out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
    put_u32(out, 16);
    put_u16(out, kFormatFloat);
    put_u16(out, 1);
    put_u32(out, static_cast<std::uint32_t>(audio.sample_rate));
    put_u32(out, static_cast<std::uint32_t>(audio.sample_rate) * 4);
    put_u16(out, 4);
    put_u16(out, 32);
    out.insert(out.end(), {'d', 'a', 't', 'a'});
    put_u32(out, data_bytes);
    for (double s : audio.samples) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(s)));
    return out;
}

void write_wav(const std::filesystem::path& path, const AudioBuffer& audio) {
    const auto bytes = encode_wav(audio);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write audio file '" + path.string() + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing audio file '" + path.string() + "'");
}

}  // namespace dysfluency
