from dissect.cstruct import cstruct

avnav_def = """
#define DAVN_MAGIC          b"DAVN"
#define DAVN_VERSION        1

typedef struct {
    char        magic[4];
    uint16      version;
    uint32      num_records;
} CheckpointHeader;

/* Followed by prod(shape) little-endian doubles */
typedef struct {
    uint16      name_length;
    char        name[name_length];
    uint8       ndim;
    uint32      shape[ndim];
} ParamRecord;

/* Followed by freq_bins * frames * channels little-endian floats, row-major */
typedef struct {
    uint32      freq_bins;
    uint32      frames;
    uint32      channels;
} SpectrogramHeader;
"""

c_avnav = cstruct(endian="<")
c_avnav.load(avnav_def)
