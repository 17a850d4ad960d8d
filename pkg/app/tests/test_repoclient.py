import random

import pytest

from app.models.ledger import CommitKind, Role
from app.tests.helpers import BASE_TIME, edit, random_bytes
from app.utils.chainledger import Ledger
from app.utils.cryptbox import parse_dek_file
from app.utils.errors import (
    CommitNotFound,
    InvalidConfig,
    IoFailure,
    NotARecipient,
    NotFound,
    PermissionDenied,
    RepoNotFound,
    StaleParent,
)
from app.utils.repoclient import (
    _put_pinned,
    checkout,
    collect_garbage,
    commit,
    grant,
    init_repo,
    init_workspace,
    load_workspace,
    log,
    open_repo,
    open_workspace,
    reconstruct,
    referenced_cids,
    refresh,
    revoke,
    verify,
)


def evolve(handle, start: bytes, count: int, seed: int = 0):
    """Commit count random edits; returns every version by seq and the new records"""
    rng = random.Random(seed)
    versions = [start]
    records = []
    for i in range(count):
        versions.append(edit(versions[-1], rng))
        records.append(commit(handle, versions[-1], timestamp=BASE_TIME + i + 1))
    return versions, records


def object_path(cas, cid):
    return cas.root / "objects" / cid.hex[:2] / cid.hex


class TestInitRepo:
    """Test repository creation"""

    def test_genesis(self, repo, ledger, genesis_plain, alice):
        """Test init publishes a GENESIS readable by the owner"""
        head = ledger.get_head(repo.repo_id)
        assert head.seq == 0
        assert head.kind == CommitKind.GENESIS
        assert head.author_id == alice.id
        assert checkout(repo, 0) == genesis_plain
        assert ledger.role_of(repo.repo_id, alice.id) == Role.OWNER

    def test_blobs_pinned(self, repo, cas):
        """Test the genesis blob and its DEK file are pinned"""
        head = repo.head
        assert cas.pinned() == {head.cid, head.dek_file_cid}

    def test_initial_members(self, alice, bob, carol, ledger, cas, genesis_plain):
        """Test extra members are added and all of them can read"""
        members = [(bob.id, Role.CONTRIBUTOR, bob.public()), (carol.id, Role.REVIEWER, carol.public())]
        handle = init_repo(genesis_plain, alice, members, 3, ledger, cas, timestamp=BASE_TIME)
        assert len(ledger.roster(handle.repo_id)) == 3
        for reader in (bob, carol):
            assert checkout(open_repo(handle.repo_id, reader, ledger, cas)) == genesis_plain

    def test_bad_interval(self, alice, ledger, cas):
        """Test N below one is refused"""
        with pytest.raises(InvalidConfig):
            init_repo(b"x", alice, [], 0, ledger, cas)

    def test_owner_listed_with_other_role(self, alice, ledger, cas):
        """Test the creator cannot be listed as anything but OWNER"""
        with pytest.raises(InvalidConfig):
            init_repo(b"x", alice, [(alice.id, Role.CONTRIBUTOR, alice.public())], 3, ledger, cas)

    def test_duplicate_member(self, alice, bob, ledger, cas):
        """Test a member listed twice is refused"""
        entry = (bob.id, Role.REVIEWER, bob.public())
        with pytest.raises(InvalidConfig):
            init_repo(b"x", alice, [entry, entry], 3, ledger, cas)

    def test_failed_init_leaves_nothing_pinned(self, alice, ledger, cas, mocker):
        """Test blobs written before a ledger failure are unpinned and collectable"""
        mocker.patch.object(ledger, "create_repo", side_effect=IoFailure("ledger unavailable"))
        with pytest.raises(IoFailure):
            init_repo(b"genesis", alice, [], 3, ledger, cas, timestamp=BASE_TIME)
        assert cas.pinned() == set()
        assert len(cas.gc()) == 2


class TestCommitAndCheckout:
    """Test versions round-trip through patches and checkpoints"""

    def test_kinds_follow_checkpoint_interval(self, repo, genesis_plain):
        """Test with N=3 five commits are PATCH, PATCH, PATCH, CHECKPOINT, PATCH"""
        _, records = evolve(repo, genesis_plain, 5)
        assert [r.kind for r in records] == [
            CommitKind.PATCH, CommitKind.PATCH, CommitKind.PATCH,
            CommitKind.CHECKPOINT_GENESIS, CommitKind.PATCH,
        ]
        assert [r.seq for r in records] == [1, 2, 3, 4, 5]

    def test_checkout_every_version(self, repo, genesis_plain, alice, ledger, cas):
        """Test a fresh handle rebuilds every committed version exactly"""
        versions, _ = evolve(repo, genesis_plain, 9, seed=1)
        fresh = open_repo(repo.repo_id, alice, ledger, cas)
        for seq, expected in enumerate(versions):
            rebuilt = reconstruct(fresh, seq)
            assert rebuilt.plaintext == expected
            assert rebuilt.patches_applied <= 3

    def test_checkpoint_starts_new_segment(self, repo, genesis_plain):
        """Test a checkpoint is rebuilt without applying any patch"""
        evolve(repo, genesis_plain, 5)
        assert reconstruct(repo, 4).patches_applied == 0
        assert reconstruct(repo, 4).segment_genesis_seq == 4
        assert reconstruct(repo, 5).patches_applied == 1
        assert repo.segment.genesis_seq == 4
        assert repo.segment.patch_count == 1

    def test_unchanged_content(self, repo, genesis_plain, cas):
        """Test committing identical bytes stores a single sealed COPY"""
        record = commit(repo, genesis_plain, timestamp=BASE_TIME + 1)
        assert record.kind == CommitKind.PATCH
        # nonce + ("EDGP1" + two lengths + one COPY) + tag
        assert len(cas.get(record.cid)) == 12 + 21 + 17 + 16
        assert checkout(repo, 1) == genesis_plain

    def test_empty_versions(self, alice, ledger, cas):
        """Test empty plaintexts commit and check out"""
        handle = init_repo(b"", alice, [], 3, ledger, cas, timestamp=BASE_TIME)
        commit(handle, b"now something", timestamp=BASE_TIME + 1)
        commit(handle, b"", timestamp=BASE_TIME + 2)
        assert checkout(handle, 0) == b""
        assert checkout(handle, 1) == b"now something"
        assert checkout(handle) == b""

    def test_checkout_out_of_range(self, repo):
        """Test seqs past the head raise CommitNotFound"""
        with pytest.raises(CommitNotFound) as exc:
            checkout(repo, 99)
        assert exc.value.seq == 99

    def test_working_copy(self, tmp_path, alice, ledger, cas, genesis_plain):
        """Test init and commit keep <repo>/data at the head version"""
        workspace = tmp_path / "ws"
        workspace.mkdir()
        handle = init_repo(genesis_plain, alice, [], 3, ledger, cas, timestamp=BASE_TIME, workspace=workspace)
        assert (workspace / "data").read_bytes() == genesis_plain
        commit(handle, b"version one", timestamp=BASE_TIME + 1)
        assert (workspace / "data").read_bytes() == b"version one"
        checkout(handle, 0)
        assert (workspace / "data").read_bytes() == b"version one"

    def test_read_only_handle(self, repo, ledger, cas):
        """Test a handle without identity lists history but cannot commit"""
        reader = open_repo(repo.repo_id, None, ledger, cas)
        assert [entry.seq for entry in log(reader)] == [0]
        with pytest.raises(PermissionDenied):
            commit(reader, b"nope")

    def test_unknown_repo(self, alice, ledger, cas):
        """Test opening an unknown repo id raises RepoNotFound"""
        with pytest.raises(RepoNotFound):
            open_repo(bytes(32), alice, ledger, cas)


class TestConcurrentWriters:
    """Test the head compare-and-set between handles"""

    def test_stale_handle_must_refresh(self, repo, alice, ledger, cas):
        """Test the slower handle gets StaleParent and succeeds after refresh"""
        other = open_repo(repo.repo_id, alice, ledger, cas)
        commit(other, b"from other", timestamp=BASE_TIME + 1)
        with pytest.raises(StaleParent):
            commit(repo, b"from repo", timestamp=BASE_TIME + 2)
        assert ledger.head_seq(repo.repo_id) == 1

        refresh(repo)
        record = commit(repo, b"from repo", timestamp=BASE_TIME + 2)
        assert record.seq == 2
        assert checkout(repo, 1) == b"from other"
        assert checkout(other, 2) == b"from repo"

    def test_handles_on_separate_ledgers(self, repo, alice, ledger, cas):
        """Test a handle over another Ledger instance on the same directory is refused, then catches up"""
        other = open_repo(repo.repo_id, alice, Ledger(ledger.path), cas)
        commit(other, b"from other", timestamp=BASE_TIME + 1)
        with pytest.raises(StaleParent):
            commit(repo, b"from repo", timestamp=BASE_TIME + 2)
        assert ledger.head_seq(repo.repo_id) == 1

        refresh(repo)
        assert checkout(repo) == b"from other"
        assert commit(repo, b"from repo", timestamp=BASE_TIME + 2).seq == 2
        refresh(other)
        assert checkout(other) == b"from repo"


class TestMembership:
    """Test grants, revocations and key distribution"""

    def test_grant_publishes_next_dek_file(self, repo, bob, ledger, cas, genesis_plain, alice):
        """Test a mid-segment grant re-wraps the same key in DEK file version 2"""
        record = grant(repo, bob.id, Role.CONTRIBUTOR, bob.public(), timestamp=BASE_TIME + 1)
        assert record.kind == CommitKind.PATCH
        dek_file = parse_dek_file(cas.get(record.dek_file_cid))
        assert dek_file.version == 2
        assert set(dek_file.entries) == {alice.id, bob.id}
        assert dek_file.segment_id == ledger.get_commit(repo.repo_id, 0).cid.digest

        bob_view = open_repo(repo.repo_id, bob, ledger, cas)
        assert checkout(bob_view) == genesis_plain
        assert checkout(bob_view, 0) == genesis_plain

    def test_grant_retried_after_failed_anchor(self, repo, bob, ledger, cas, genesis_plain, mocker):
        """Test a grant whose DEK file commit failed gives the key when granted again"""
        real_commit = ledger.commit_data
        failures = []

        def fail_once(*args, **kwargs):
            if not failures:
                failures.append(args)
                raise IoFailure("ledger unavailable")
            return real_commit(*args, **kwargs)

        mocker.patch.object(ledger, "commit_data", side_effect=fail_once)
        with pytest.raises(IoFailure):
            grant(repo, bob.id, Role.CONTRIBUTOR, bob.public(), timestamp=BASE_TIME + 1)
        assert ledger.role_of(repo.repo_id, bob.id) == Role.CONTRIBUTOR
        assert ledger.head_seq(repo.repo_id) == 0

        record = grant(repo, bob.id, Role.CONTRIBUTOR, timestamp=BASE_TIME + 2)
        assert record is not None and record.seq == 1
        assert bob.id in parse_dek_file(cas.get(record.dek_file_cid)).recipients
        assert checkout(open_repo(repo.repo_id, bob, ledger, cas)) == genesis_plain
        assert grant(repo, bob.id, Role.CONTRIBUTOR, timestamp=BASE_TIME + 3) is None

    def test_granted_member_commits(self, repo, bob, ledger, cas):
        """Test a new contributor can commit on the shared segment"""
        grant(repo, bob.id, Role.CONTRIBUTOR, bob.public(), timestamp=BASE_TIME + 1)
        bob_view = open_repo(repo.repo_id, bob, ledger, cas)
        record = commit(bob_view, b"written by bob", timestamp=BASE_TIME + 2)
        assert record.author_id == bob.id
        refresh(repo)
        assert repo.plaintext == b"written by bob"

    def test_grant_on_full_segment_checkpoints(self, repo, bob, genesis_plain, cas, alice):
        """Test a grant when the segment is full starts a new one"""
        versions, _ = evolve(repo, genesis_plain, 3)
        record = grant(repo, bob.id, Role.REVIEWER, bob.public(), timestamp=BASE_TIME + 10)
        assert record.kind == CommitKind.CHECKPOINT_GENESIS
        dek_file = parse_dek_file(cas.get(record.dek_file_cid))
        assert dek_file.version == 1
        assert set(dek_file.entries) == {alice.id, bob.id}
        assert checkout(repo) == versions[-1]

    def test_role_change_needs_no_commit(self, repo, bob, ledger):
        """Test changing an existing member's role publishes nothing"""
        grant(repo, bob.id, Role.REVIEWER, bob.public(), timestamp=BASE_TIME + 1)
        assert grant(repo, bob.id, Role.CONTRIBUTOR, timestamp=BASE_TIME + 2) is None
        assert ledger.head_seq(repo.repo_id) == 1
        assert ledger.role_of(repo.repo_id, bob.id) == Role.CONTRIBUTOR

    def test_only_owner_grants(self, repo, bob, carol, ledger, cas):
        """Test a contributor cannot grant roles"""
        grant(repo, bob.id, Role.CONTRIBUTOR, bob.public(), timestamp=BASE_TIME + 1)
        bob_view = open_repo(repo.repo_id, bob, ledger, cas)
        with pytest.raises(PermissionDenied):
            grant(bob_view, carol.id, Role.REVIEWER, carol.public())
        with pytest.raises(PermissionDenied):
            revoke(bob_view, repo.identity.id)

    def test_outsider_cannot_read(self, repo, mallory, ledger, cas):
        """Test an identity outside the roster gets NotARecipient naming the genesis"""
        outsider = open_repo(repo.repo_id, mallory, ledger, cas)
        with pytest.raises(NotARecipient) as exc:
            checkout(outsider)
        assert exc.value.seq == 0
        with pytest.raises(PermissionDenied):
            grant(outsider, mallory.id, Role.OWNER, mallory.public())

    def test_reviewer_cannot_commit(self, repo, bob, ledger, cas):
        """Test reviewers read but never commit"""
        grant(repo, bob.id, Role.REVIEWER, bob.public(), timestamp=BASE_TIME + 1)
        reviewer = open_repo(repo.repo_id, bob, ledger, cas)
        assert checkout(reviewer) == repo.plaintext
        with pytest.raises(PermissionDenied):
            commit(reviewer, b"edit")

    def test_revoke_rekeys(self, repo, bob, alice, ledger, cas, genesis_plain):
        """Test after revocation the next commit is a checkpoint the revoked member cannot open"""
        grant(repo, bob.id, Role.CONTRIBUTOR, bob.public(), timestamp=BASE_TIME + 1)
        bob_view = open_repo(repo.repo_id, bob, ledger, cas)
        revoke(repo, bob.id, timestamp=BASE_TIME + 2)

        record = commit(repo, b"after revocation", timestamp=BASE_TIME + 3)
        assert record.kind == CommitKind.CHECKPOINT_GENESIS
        assert set(parse_dek_file(cas.get(record.dek_file_cid)).entries) == {alice.id}

        with pytest.raises(NotARecipient) as exc:
            checkout(bob_view)
        assert exc.value.seq == record.seq
        # segments sealed before the revocation stay readable
        assert checkout(bob_view, 1) == genesis_plain
        with pytest.raises(PermissionDenied):
            commit(bob_view, b"still here?")

    def test_log(self, repo, genesis_plain, ledger, cas):
        """Test log lists every commit in seq order"""
        evolve(repo, genesis_plain, 4)
        entries = log(open_repo(repo.repo_id, None, ledger, cas))
        assert [e.seq for e in entries] == [0, 1, 2, 3, 4]
        assert entries[4].kind == CommitKind.CHECKPOINT_GENESIS


class TestAtomicity:
    """Test failures leave no trace"""

    def test_failed_commit_is_invisible(self, repo, ledger, cas, genesis_plain, mocker):
        """Test a commit failing at the ledger leaves only a collectable orphan"""
        before = cas.list_cids()
        pinned = cas.pinned()
        mocker.patch.object(ledger, "commit_data", side_effect=IoFailure("ledger unavailable"))
        with pytest.raises(IoFailure):
            commit(repo, genesis_plain + b"more", timestamp=BASE_TIME + 1)
        mocker.stopall()

        assert ledger.head_seq(repo.repo_id) == 0
        assert repo.head.seq == 0
        assert cas.pinned() == pinned
        assert len(cas.gc()) == 1
        assert cas.list_cids() == before

        record = commit(repo, genesis_plain + b"more", timestamp=BASE_TIME + 1)
        assert record.seq == 1
        assert checkout(repo, 1) == genesis_plain + b"more"

    def test_failed_checkpoint_is_invisible(self, repo, ledger, cas, genesis_plain, mocker):
        """Test a failed checkpoint unpins both the new genesis and its DEK file"""
        versions, _ = evolve(repo, genesis_plain, 3)
        pinned = cas.pinned()
        mocker.patch.object(ledger, "commit_data", side_effect=IoFailure("ledger unavailable"))
        with pytest.raises(IoFailure):
            commit(repo, b"checkpoint", timestamp=BASE_TIME + 10)
        mocker.stopall()
        assert cas.pinned() == pinned
        assert len(cas.gc()) == 2
        assert checkout(repo) == versions[-1]

    def test_unpin_superseded_segments(self, repo, ledger, cas, genesis_plain):
        """Test with unpinning enabled a checkpoint releases older segments to gc"""
        repo.unpin_superseded = True
        versions, records = evolve(repo, genesis_plain, 4)
        checkpoint = records[-1]
        assert checkpoint.kind == CommitKind.CHECKPOINT_GENESIS
        assert cas.pinned() == {checkpoint.cid, checkpoint.dek_file_cid}

        roots = referenced_cids(repo, include_superseded=False)
        assert roots == {checkpoint.cid, checkpoint.dek_file_cid}
        assert len(cas.gc(roots)) == 5
        assert checkout(repo, 4) == versions[4]
        with pytest.raises(NotFound):
            checkout(repo, 0)

    def test_default_keeps_history(self, repo, cas, genesis_plain):
        """Test without unpinning gc keeps every segment"""
        evolve(repo, genesis_plain, 4)
        assert cas.gc() == set()
        assert referenced_cids(repo) == repo.ledger.referenced_cids(repo.repo_id)

    def test_gc_collects_orphan_pins(self, repo, cas, genesis_plain):
        """Test a pinned blob no commit references is released and removed"""
        orphan = _put_pinned(cas, b"stored but never committed", [])
        assert cas.is_pinned(orphan)
        assert collect_garbage(repo.ledger, cas) == {orphan}
        assert not cas.contains(orphan)
        assert cas.pinned() == repo.ledger.referenced_cids(repo.repo_id)
        assert checkout(repo) == genesis_plain

    def test_gc_without_superseded(self, repo, cas, genesis_plain):
        """Test excluding superseded segments releases their pins even when committed pinned"""
        versions, records = evolve(repo, genesis_plain, 4)
        checkpoint = records[-1]
        assert collect_garbage(repo.ledger, cas) == set()

        removed = collect_garbage(repo.ledger, cas, include_superseded=False)
        assert len(removed) == 5
        assert cas.pinned() == {checkpoint.cid, checkpoint.dek_file_cid}
        assert checkout(repo, 4) == versions[4]
        with pytest.raises(NotFound):
            checkout(repo, 0)


class TestConfidentiality:
    """Test no plaintext reaches the stores"""

    def test_no_plaintext_on_disk(self, tmp_path, alice, bob, ledger, cas):
        """Test marker bytes from genesis and patches never appear in any stored file"""
        genesis_marker = b"GENESIS-CONFIDENTIAL-MARKER"
        patch_marker = b"PATCH-CONFIDENTIAL-MARKER"
        plain = random_bytes(30_000, seed=3) + genesis_marker * 10
        handle = init_repo(plain, alice, [(bob.id, Role.REVIEWER, bob.public())], 3, ledger, cas)
        for i in range(4):
            plain = plain[:5_000] + patch_marker * (i + 1) + plain[5_000:]
            commit(handle, plain, timestamp=BASE_TIME + i)

        files = [path for path in tmp_path.rglob("*") if path.is_file()]
        assert files
        for path in files:
            data = path.read_bytes()
            assert genesis_marker not in data, path
            assert patch_marker not in data, path


class TestVerify:
    """Test end-to-end audits"""

    def test_clean_repo(self, repo, genesis_plain):
        """Test an untouched repository verifies and its head rebuilds"""
        evolve(repo, genesis_plain, 5)
        report = verify(repo)
        assert report.ok
        assert report.reconstruction_ok is True
        assert len(report.commits) == 6

    def test_corrupted_patch_names_seq(self, repo, genesis_plain, cas, ledger):
        """Test a flipped byte in a stored patch is reported at its seq"""
        evolve(repo, genesis_plain, 3)
        target = ledger.get_commit(repo.repo_id, 2).cid
        path = object_path(cas, target)
        raw = bytearray(path.read_bytes())
        raw[20] ^= 0x01
        path.write_bytes(bytes(raw))

        report = verify(repo)
        assert not report.ok
        assert report.failing_seqs == [2]
        assert "payload mismatch" in report.commits[2].issues
        assert report.reconstruction_ok is False
        assert "seq 2" in report.reconstruction_issue

    def test_missing_dek_file(self, repo, cas, ledger):
        """Test a deleted DEK file is reported for the commits referencing it"""
        head = ledger.get_head(repo.repo_id)
        object_path(cas, head.dek_file_cid).unlink()
        report = verify(repo)
        assert report.failing_seqs == [0]
        assert not report.commits[0].dek_file_ok
        assert report.reconstruction_ok is False

    def test_read_only_skips_reconstruction(self, repo, ledger, cas):
        """Test verifying without an identity audits the chain only"""
        report = verify(open_repo(repo.repo_id, None, ledger, cas))
        assert report.ok
        assert report.reconstruction_ok is None
        assert report.reconstruction_issue.startswith("skipped")

    def test_outsider_skips_reconstruction(self, repo, mallory, ledger, cas):
        """Test a non-recipient still gets the chain audit"""
        report = verify(open_repo(repo.repo_id, mallory, ledger, cas))
        assert report.ok
        assert report.reconstruction_issue.startswith("skipped")


class TestWorkspace:
    """Test the on-disk repository layout"""

    def test_init_and_open(self, tmp_path, alice, genesis_plain):
        """Test a workspace holds its config, stores and working copy"""
        repo_path = tmp_path / "project"
        handle = init_workspace(repo_path, genesis_plain, alice, "alice", 4)
        config = load_workspace(repo_path)
        assert config.repo_id == handle.repo_id.hex()
        assert config.identity == "alice"
        assert (repo_path / ".edg" / "ledger").is_dir()
        assert (repo_path / "data").read_bytes() == genesis_plain

        reopened = open_workspace(repo_path, alice)
        assert checkout(reopened) == genesis_plain

    def test_init_twice(self, tmp_path, alice):
        """Test a directory holds at most one repository"""
        init_workspace(tmp_path / "p", b"one", alice, "alice", 4)
        with pytest.raises(InvalidConfig):
            init_workspace(tmp_path / "p", b"two", alice, "alice", 4)

    def test_missing_workspace(self, tmp_path):
        """Test opening a plain directory raises RepoNotFound"""
        with pytest.raises(RepoNotFound):
            load_workspace(tmp_path)
