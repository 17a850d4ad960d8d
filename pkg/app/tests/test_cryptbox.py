import pytest
from hypothesis import given, settings as hsettings, strategies as st, HealthCheck

from app.models.crypto import Dek
from app.tests.helpers import seeded
from app.utils.cryptbox import (
    EciesWrapper,
    Identity,
    NonceSequence,
    build_dek_file,
    decrypt_blob,
    encode_dek_file,
    encode_sealed,
    encrypt_blob,
    generate_dek,
    keygen,
    member_id,
    open_dek_file,
    parse_dek_file,
    parse_sealed,
    sign,
    verify_sig,
)
from app.utils.errors import (
    AuthenticationFailure,
    DuplicateRecipient,
    EmptyRecipients,
    EntropyUnavailable,
    MalformedDekFile,
    NonceExhaustion,
    NotARecipient,
    SeedTooShort,
    UnwrapFailure,
)

SEGMENT = bytes(range(32))
POOL = [seeded(n) for n in range(1, 26)]


def zero_nonces() -> NonceSequence:
    return NonceSequence(prefix=bytes(4), start=0)


class TestIdentities:
    """Test identity generation and serialization"""

    def test_seeded_keygen_is_deterministic(self):
        """Test identical seeds give identical identities"""
        assert keygen(b"s" * 32) == keygen(b"s" * 32)
        assert keygen(b"s" * 32).id != keygen(b"t" * 32).id

    def test_short_seed_rejected(self):
        """Test seeds under 32 bytes raise SeedTooShort"""
        with pytest.raises(SeedTooShort):
            keygen(b"s" * 31)

    def test_random_keygen_differs(self):
        """Test two unseeded identities differ"""
        assert keygen().id != keygen().id

    def test_id_is_hash_of_signing_key(self, alice):
        """Test the identity id is SHA-256 of the compressed signing key"""
        assert alice.id == member_id(alice.sign_pub)
        assert len(alice.sign_pub) == 33 and len(alice.enc_pub) == 33

    def test_private_bytes_roundtrip(self, alice):
        """Test private scalars reload into the same identity"""
        assert Identity.from_private_bytes(alice.private_bytes()) == alice

    def test_public_part(self, alice):
        """Test public() carries only the public keys"""
        keys = alice.public()
        assert keys.id == alice.id
        assert keys.sign_pub == alice.sign_pub
        assert keys.enc_pub == alice.enc_pub

    def test_dek_length(self):
        """Test a segment key is 32 bytes"""
        assert len(generate_dek().key) == 32

    def test_deks_distinct(self):
        """Test 1000 draws never repeat"""
        assert len({generate_dek().key for _ in range(1000)}) == 1000

    def test_dek_bits_balanced(self):
        """Test the share of one bits over a million key bits is within four sigma of half"""
        n_bits = 1_000_000
        stream = b"".join(generate_dek().key for _ in range(n_bits // 256 + 1))[:n_bits // 8]
        ones = int.from_bytes(stream, "big").bit_count()
        sigma = (n_bits ** 0.5) / 2
        assert abs(ones - n_bits / 2) <= 4 * sigma

    def test_dek_entropy_failure(self, mocker):
        """Test a failing random source raises EntropyUnavailable"""
        aesgcm = mocker.patch("app.utils.cryptbox.AESGCM")
        aesgcm.generate_key.side_effect = OSError("no entropy")
        with pytest.raises(EntropyUnavailable):
            generate_dek()


class TestBlobEncryption:
    """Test AES-256-GCM blob encryption"""

    def test_aes_gcm_vector_empty_plaintext(self):
        """Test zero key, zero nonce, empty plaintext gives the published tag"""
        sealed = encrypt_blob(b"", Dek(key=bytes(32)), nonces=zero_nonces())
        assert sealed.nonce == bytes(12)
        assert sealed.ciphertext == b""
        assert sealed.tag.hex() == "530f8afbc74536b9a963b4f1c4cb738b"

    def test_aes_gcm_vector_zero_block(self):
        """Test zero key, zero nonce, one zero block gives the published ciphertext and tag"""
        sealed = encrypt_blob(bytes(16), Dek(key=bytes(32)), nonces=zero_nonces())
        assert sealed.ciphertext.hex() == "cea7403d4d606b6e074ec5d3baf39d18"
        assert sealed.tag.hex() == "d0d1c8a799996bf0265b98b5d48ab919"

    def test_roundtrip(self):
        """Test decrypt(encrypt(x)) == x"""
        dek = generate_dek()
        sealed = encrypt_blob(b"secret data", dek, SEGMENT)
        assert decrypt_blob(sealed, dek, SEGMENT) == b"secret data"

    def test_wrong_key(self):
        """Test decrypting under another key raises AuthenticationFailure"""
        sealed = encrypt_blob(b"secret", generate_dek())
        with pytest.raises(AuthenticationFailure):
            decrypt_blob(sealed, generate_dek())

    def test_wrong_segment(self):
        """Test the segment id is bound as associated data"""
        dek = generate_dek()
        sealed = encrypt_blob(b"secret", dek, SEGMENT)
        with pytest.raises(AuthenticationFailure):
            decrypt_blob(sealed, dek, bytes(32))

    def test_tampered_ciphertext(self):
        """Test a flipped ciphertext bit is rejected"""
        dek = generate_dek()
        raw = bytearray(encode_sealed(encrypt_blob(b"secret message", dek)))
        raw[14] ^= 0x80
        with pytest.raises(AuthenticationFailure):
            decrypt_blob(parse_sealed(bytes(raw)), dek)

    def test_wire_form(self):
        """Test sealed bytes are nonce, ciphertext and tag back to back"""
        sealed = encrypt_blob(b"abc", generate_dek())
        wire = encode_sealed(sealed)
        assert len(wire) == 12 + 3 + 16
        assert parse_sealed(wire) == sealed

    def test_truncated_wire_form(self):
        """Test blobs shorter than nonce plus tag are rejected"""
        with pytest.raises(AuthenticationFailure):
            parse_sealed(bytes(27))

    def test_nonces_unique(self):
        """Test successive encryptions never reuse a nonce"""
        dek = generate_dek()
        nonces = {encrypt_blob(b"x", dek).nonce for _ in range(1000)}
        assert len(nonces) == 1000

    def test_nonce_exhaustion(self):
        """Test the counter refuses to wrap around"""
        seq = NonceSequence(prefix=b"abcd", start=NonceSequence.LIMIT - 1)
        assert seq.next() == b"abcd" + b"\xff" * 8
        with pytest.raises(NonceExhaustion):
            seq.next()


class TestDekFiles:
    """Test multi-recipient key files"""

    def test_every_recipient_opens(self, alice, bob, carol):
        """Test each recipient unwraps the same Dek"""
        dek = generate_dek()
        data = build_dek_file(dek, SEGMENT, [(p.id, p.enc_pub) for p in (alice, bob, carol)], version=1)
        for member in (alice, bob, carol):
            assert open_dek_file(data, member) == dek

    def test_non_recipient(self, alice, mallory):
        """Test an identity without an entry gets NotARecipient"""
        data = build_dek_file(generate_dek(), SEGMENT, [(alice.id, alice.enc_pub)], version=1)
        with pytest.raises(NotARecipient):
            open_dek_file(data, mallory)

    def test_empty_recipients(self):
        """Test a DEK file needs at least one recipient"""
        with pytest.raises(EmptyRecipients):
            build_dek_file(generate_dek(), SEGMENT, [], version=1)

    def test_duplicate_recipient(self, alice):
        """Test a recipient may appear only once"""
        with pytest.raises(DuplicateRecipient):
            build_dek_file(generate_dek(), SEGMENT, [(alice.id, alice.enc_pub)] * 2, version=1)

    def test_wrapped_entry_size(self, alice):
        """Test each wrapped key is point, nonce and sealed key (93 bytes)"""
        data = build_dek_file(generate_dek(), SEGMENT, [(alice.id, alice.enc_pub)], version=1)
        parsed = parse_dek_file(data)
        assert len(parsed.entries[alice.id]) == EciesWrapper.WRAPPED_LEN == 93
        assert parsed.segment_id == SEGMENT
        assert parsed.version == 1

    def test_canonical_encoding(self, alice, bob):
        """Test entries are sorted by id and re-encoding is byte identical"""
        data = build_dek_file(generate_dek(), SEGMENT, [(bob.id, bob.enc_pub), (alice.id, alice.enc_pub)], version=4)
        parsed = parse_dek_file(data)
        assert list(parsed.entries) == sorted([alice.id, bob.id])
        assert encode_dek_file(parsed) == data
        assert data.startswith(b"EDGK1" + SEGMENT + (4).to_bytes(8, "big"))

    def test_truncated_file(self, alice):
        """Test a cut-off DEK file is malformed"""
        data = build_dek_file(generate_dek(), SEGMENT, [(alice.id, alice.enc_pub)], version=1)
        with pytest.raises(MalformedDekFile):
            parse_dek_file(data[:-1])

    def test_trailing_bytes(self, alice):
        """Test extra bytes after the entries are malformed"""
        data = build_dek_file(generate_dek(), SEGMENT, [(alice.id, alice.enc_pub)], version=1)
        with pytest.raises(MalformedDekFile):
            parse_dek_file(data + b"\x00")

    def test_tampered_entry(self, alice):
        """Test a modified wrapped key fails to unwrap"""
        data = bytearray(build_dek_file(generate_dek(), SEGMENT, [(alice.id, alice.enc_pub)], version=1))
        data[-5] ^= 0x01
        with pytest.raises(UnwrapFailure):
            open_dek_file(bytes(data), alice)

    def test_entry_bound_to_recipient(self, alice, bob):
        """Test an entry moved under another recipient id does not open"""
        dek = generate_dek()
        data = build_dek_file(dek, SEGMENT, [(alice.id, bob.enc_pub)], version=1)
        forged = data.replace(alice.id, bob.id)
        with pytest.raises(UnwrapFailure):
            open_dek_file(forged, bob)

    @hsettings(max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture])
    @given(st.lists(st.integers(min_value=0, max_value=len(POOL) - 1), min_size=1, max_size=20, unique=True))
    def test_random_rosters(self, picks):
        """Test every recipient opens and every outsider is refused"""
        dek = generate_dek()
        members = [POOL[i] for i in picks]
        data = build_dek_file(dek, SEGMENT, [(m.id, m.enc_pub) for m in members], version=1)
        for member in members:
            assert open_dek_file(data, member) == dek
        for outsider in (p for i, p in enumerate(POOL) if i not in picks):
            with pytest.raises(NotARecipient):
                open_dek_file(data, outsider)


class TestSignatures:
    """Test ECDSA signatures"""

    def test_sign_verify(self, alice):
        """Test a fresh signature verifies"""
        assert verify_sig(b"payload", sign(b"payload", alice), alice.sign_pub)

    def test_altered_payload(self, alice):
        """Test a signature does not cover other bytes"""
        assert not verify_sig(b"payload!", sign(b"payload", alice), alice.sign_pub)

    def test_wrong_signer(self, alice, bob):
        """Test a signature does not verify under another key"""
        assert not verify_sig(b"payload", sign(b"payload", alice), bob.sign_pub)

    def test_garbage_never_raises(self, alice):
        """Test malformed signatures and keys return False"""
        assert not verify_sig(b"payload", b"\x00" * 10, alice.sign_pub)
        assert not verify_sig(b"payload", sign(b"payload", alice), b"\x02" + b"\x00" * 5)
