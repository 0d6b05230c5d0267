from rest_framework import serializers

from . import pulselang
from .acquisition import MIN_POINTS


class StrictSerializer(serializers.Serializer):
    """Rejects keys that are not declared fields."""

    def to_internal_value(self, data):
        if isinstance(data, dict):
            unknown = sorted(set(data) - set(self.fields))
            if unknown:
                raise serializers.ValidationError({key: "Unknown field." for key in unknown})
        return super().to_internal_value(data)


class SpinSystemSerializer(StrictSerializer):
    delta = serializers.FloatField(default=492.0, help_text="Frequency separation of the two spins (Hz).")
    j = serializers.FloatField(default=4.6, min_value=0.0, help_text="Scalar coupling (Hz).")
    t1 = serializers.FloatField(default=1.7, help_text="Longitudinal relaxation time (s).")
    t2 = serializers.FloatField(default=0.58, help_text="Transverse relaxation time (s).")
    epsilon = serializers.FloatField(default=0.92, min_value=0.0, max_value=1.0,
                                     help_text="Singlet polarization of the Werner state.")
    ref_freq = serializers.FloatField(default=400.0, help_text="Spectrometer proton frequency (MHz).")
    shift_i = serializers.FloatField(default=-7.55, help_text="Chemical shift of spin I (ppm).")
    shift_s = serializers.FloatField(default=-6.32, help_text="Chemical shift of spin S (ppm).")

    def validate_delta(self, value):
        if value <= 0:
            raise serializers.ValidationError("delta must be positive.")
        return value

    def validate_ref_freq(self, value):
        if value <= 0:
            raise serializers.ValidationError("ref_freq must be positive.")
        return value

    def validate(self, data):
        if data["t1"] <= 0:
            raise serializers.ValidationError({"t1": "t1 must be positive."})
        if data["t2"] <= 0:
            raise serializers.ValidationError({"t2": "t2 must be positive."})
        if data["t2"] > 2 * data["t1"]:
            raise serializers.ValidationError({"t2": "t2 must not exceed 2*t1."})
        return data


class NoiseModelSerializer(StrictSerializer):
    enabled = serializers.BooleanField(default=True)
    t1 = serializers.FloatField(required=False, allow_null=True, default=None,
                                help_text="Defaults to the spin system's t1.")
    t2 = serializers.FloatField(required=False, allow_null=True, default=None,
                                help_text="Defaults to the spin system's t2.")
    equilibrium_excited_population = serializers.FloatField(default=0.5, min_value=0.0, max_value=1.0)
    substeps_per_delay = serializers.IntegerField(default=1, min_value=1)

    def validate_t1(self, value):
        if value is not None and value <= 0:
            raise serializers.ValidationError("t1 must be positive.")
        return value

    def validate_t2(self, value):
        if value is not None and value <= 0:
            raise serializers.ValidationError("t2 must be positive.")
        return value


class AcquisitionParamsSerializer(StrictSerializer):
    spectral_width = serializers.FloatField(default=2000.0, help_text="Spectral width (Hz).")
    points = serializers.IntegerField(default=16384, min_value=MIN_POINTS)
    readout_pulse = serializers.BooleanField(default=False)

    def validate_points(self, value):
        if value & (value - 1):
            raise serializers.ValidationError("points must be a power of two.")
        return value


class ConfigSerializer(StrictSerializer):
    system = SpinSystemSerializer()
    noise = NoiseModelSerializer()
    acquisition = AcquisitionParamsSerializer()
    output_dir = serializers.CharField(required=False, allow_null=True, default=None)

    def validate(self, data):
        system, noise = data["system"], data["noise"]
        t1 = noise["t1"] if noise["t1"] is not None else system["t1"]
        t2 = noise["t2"] if noise["t2"] is not None else system["t2"]
        if t2 > 2 * t1:
            raise serializers.ValidationError({"noise": {"t2": ["t2 must not exceed 2*t1."]}})
        width = data["acquisition"]["spectral_width"]
        if width <= system["delta"] + 4 * system["j"]:
            raise serializers.ValidationError(
                {"acquisition": {"spectral_width": ["spectral_width must exceed delta + 4*j."]}}
            )
        return data


class MultipletReadingSerializer(serializers.Serializer):
    spin = serializers.CharField()
    center_hz = serializers.FloatField(source="center")
    integral = serializers.FloatField()
    bit = serializers.IntegerField(allow_null=True)


class ExperimentRecordSerializer(serializers.Serializer):
    """Output schema of a single run."""
    kind = serializers.CharField()
    f = serializers.CharField(source="f.value")
    epsilon = serializers.FloatField()
    noise = serializers.SerializerMethodField()
    sequences = serializers.SerializerMethodField()
    bits = serializers.DictField(child=serializers.IntegerField(allow_null=True))
    result_bit = serializers.IntegerField(allow_null=True)
    verdict = serializers.SerializerMethodField()
    readings = MultipletReadingSerializer(many=True)
    multiplet_ratio = serializers.FloatField()
    wall_clock_s = serializers.FloatField(source="wall_clock")
    spectrum = serializers.CharField(source="spectrum_path", allow_null=True)

    def get_noise(self, record):
        noise = record.noise
        return {
            "enabled": noise.enabled,
            "t1": noise.t1,
            "t2": noise.t2,
            "equilibrium_excited_population": noise.equilibrium_excited_population,
            "substeps_per_delay": noise.substeps_per_delay,
        }

    def get_sequences(self, record):
        return [{"stage": stage, "text": pulselang.format(seq)} for stage, seq in record.sequences]

    def get_verdict(self, record):
        return record.verdict if record.kind == "quantum" else None


class TruthTableCellSerializer(serializers.Serializer):
    kind = serializers.CharField()
    f = serializers.CharField(source="f.value")
    expected = serializers.IntegerField()
    observed = serializers.IntegerField(allow_null=True)
    passed = serializers.BooleanField()
    error = serializers.CharField(allow_null=True)


class ScanRowSerializer(serializers.Serializer):
    epsilon = serializers.FloatField()
    result_bit = serializers.IntegerField(allow_null=True)
    final_polarization = serializers.FloatField()
    pt_min_eig = serializers.FloatField(source="initial_pt_min_eig")
    final_pt_min_eig = serializers.FloatField()
    error = serializers.CharField(allow_null=True)
